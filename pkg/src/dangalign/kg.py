"""Knowledge-graph data model and TSV ingestion.

File conventions: UTF-8, single TAB separator, lines starting with '#'
are comments. Ids are assigned per KG in first-appearance order, so id
assignment is a pure function of file contents.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DataWarning

COMMENT_PREFIX = "#"
SEP = "\t"


class KnowledgeGraph:
    """Entity/relation vocabularies plus an integer-encoded triple list.

    Triples keep file order (first occurrence wins); duplicates are
    dropped with a warning. Instances are treated as immutable after
    construction.
    """

    def __init__(self, entities: list[str], relations: list[str],
                 triples: list[tuple[int, int, int]]):
        self.entities = entities
        self.relations = relations
        self.triples = triples
        self.ent_index = {name: i for i, name in enumerate(entities)}
        self.rel_index = {name: i for i, name in enumerate(relations)}
        if len(self.ent_index) != len(entities):
            raise DataError("duplicate entity names in vocabulary")
        if len(self.rel_index) != len(relations):
            raise DataError("duplicate relation names in vocabulary")
        for h, r, t in triples:
            if not (0 <= h < len(entities) and 0 <= t < len(entities)):
                raise DataError(f"triple entity id out of bounds: {(h, r, t)}")
            if not (0 <= r < len(relations)):
                raise DataError(f"triple relation id out of bounds: {(h, r, t)}")

    @classmethod
    def from_string_triples(cls, rows: list[tuple[str, str, str]]) -> "KnowledgeGraph":
        """Build a graph from (head, relation, tail) name triples."""
        if not rows:
            raise DataError("a KG must have at least one triple")
        ent_index: dict[str, int] = {}
        rel_index: dict[str, int] = {}
        triples: list[tuple[int, int, int]] = []
        seen: set[tuple[int, int, int]] = set()
        dup = 0
        for h, r, t in rows:
            hid = ent_index.setdefault(h, len(ent_index))
            rid = rel_index.setdefault(r, len(rel_index))
            tid = ent_index.setdefault(t, len(ent_index))
            key = (hid, rid, tid)
            if key in seen:
                dup += 1
                continue
            seen.add(key)
            triples.append(key)
        if dup:
            warnings.warn(f"dropped {dup} duplicate triple(s)", DataWarning, stacklevel=2)
        return cls(list(ent_index), list(rel_index), triples)

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def entity_id(self, name: str) -> int:
        try:
            return self.ent_index[name]
        except KeyError:
            raise DataError(f"unknown entity {name!r}") from None

    def triple_array(self) -> np.ndarray:
        """Triples as an (n, 3) int64 array in iteration order."""
        return np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)

    def __eq__(self, other):
        return (isinstance(other, KnowledgeGraph)
                and self.entities == other.entities
                and self.relations == other.relations
                and self.triples == other.triples)

    def __repr__(self):
        return (f"KnowledgeGraph({self.n_entities} entities, "
                f"{self.n_relations} relations, {len(self.triples)} triples)")


def _data_lines(path):
    """Yield (line_number, stripped_line) skipping blanks and comments."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith(COMMENT_PREFIX):
                continue
            yield lineno, line


def load_kg(path) -> KnowledgeGraph:
    """Load a triples file: `head<TAB>relation<TAB>tail` per line."""
    rows = []
    for lineno, line in _data_lines(path):
        fields = line.split(SEP)
        if len(fields) != 3:
            raise DataError(f"{path}: line {lineno}: expected 3 tab-separated "
                            f"fields, got {len(fields)}")
        rows.append(tuple(fields))
    if not rows:
        raise DataError(f"{path}: a KG must have at least one triple")
    return KnowledgeGraph.from_string_triples(rows)


def save_kg(kg: KnowledgeGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for h, r, t in kg.triples:
            fh.write(f"{kg.entities[h]}{SEP}{kg.relations[r]}{SEP}{kg.entities[t]}\n")


@dataclass
class AlignmentSeeds:
    """Seed alignment pairs (source-id, target-id), one-to-one."""

    pairs: list[tuple[int, int]]

    def __post_init__(self):
        sources = [s for s, _ in self.pairs]
        targets = [t for _, t in self.pairs]
        if len(set(sources)) != len(sources):
            raise DataError("a source entity appears in more than one seed pair")
        if len(set(targets)) != len(targets):
            raise DataError("a target entity appears in more than one seed pair")

    @property
    def source_ids(self) -> list[int]:
        return [s for s, _ in self.pairs]

    @property
    def target_ids(self) -> list[int]:
        return [t for _, t in self.pairs]

    def __len__(self):
        return len(self.pairs)


def load_links(path, source_kg: KnowledgeGraph, target_kg: KnowledgeGraph) -> AlignmentSeeds:
    """Load a links file: `source_entity<TAB>target_entity` per line."""
    pairs = []
    seen_src: dict[int, int] = {}
    seen_tgt: dict[int, int] = {}
    for lineno, line in _data_lines(path):
        fields = line.split(SEP)
        if len(fields) != 2:
            raise DataError(f"{path}: line {lineno}: expected 2 tab-separated "
                            f"fields, got {len(fields)}")
        try:
            sid = source_kg.entity_id(fields[0])
            tid = target_kg.entity_id(fields[1])
        except DataError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
        if sid in seen_src:
            raise DataError(f"{path}: line {lineno}: source entity "
                            f"{fields[0]!r} already paired at line {seen_src[sid]}")
        if tid in seen_tgt:
            raise DataError(f"{path}: line {lineno}: target entity "
                            f"{fields[1]!r} already paired at line {seen_tgt[tid]}")
        seen_src[sid] = lineno
        seen_tgt[tid] = lineno
        pairs.append((sid, tid))
    return AlignmentSeeds(pairs)


def save_links(seeds: AlignmentSeeds, source_kg: KnowledgeGraph,
               target_kg: KnowledgeGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s, t in seeds.pairs:
            fh.write(f"{source_kg.entities[s]}{SEP}{target_kg.entities[t]}\n")


def load_entity_list(path, kg: KnowledgeGraph) -> list[int]:
    """Load a one-entity-per-line file (e.g. dangling labels)."""
    ids = []
    seen = set()
    dup = 0
    for lineno, line in _data_lines(path):
        try:
            eid = kg.entity_id(line)
        except DataError as exc:
            raise DataError(f"{path}: line {lineno}: {exc}") from None
        if eid in seen:
            dup += 1
            continue
        seen.add(eid)
        ids.append(eid)
    if dup:
        warnings.warn(f"{path}: dropped {dup} duplicate entit(y/ies)",
                      DataWarning, stacklevel=2)
    return ids


@dataclass
class DanglingLabels:
    """Source-side labels: dangling ids vs matchable ids (from seeds)."""

    dangling: set[int]
    matchable: set[int]

    @classmethod
    def build(cls, dangling_ids, seeds: AlignmentSeeds,
              source_kg: KnowledgeGraph) -> "DanglingLabels":
        dangling = set(dangling_ids)
        matchable = set(seeds.source_ids)
        overlap = dangling & matchable
        if overlap:
            raise DataError(f"{len(overlap)} entit(y/ies) labeled both dangling "
                            f"and matchable, e.g. id {min(overlap)}")
        bad = [e for e in dangling if not (0 <= e < source_kg.n_entities)]
        if bad:
            raise DataError(f"dangling id {bad[0]} outside source vocabulary")
        return cls(dangling, matchable)


@dataclass
class SplitPart:
    """One partition of the dataset: seed pairs plus dangling ids."""

    seeds: list[tuple[int, int]]
    dangling: list[int]

    @property
    def seed_sources(self) -> list[int]:
        return [s for s, _ in self.seeds]


class DatasetSplit:
    """Train/validation/test partitions with an access audit on test.

    Reading `.test` increments `test_reads`; the training loop asserts
    the counter stayed at zero, which catches accidental test leakage.
    """

    def __init__(self, train: SplitPart, validation: SplitPart, test: SplitPart):
        self.train = train
        self.validation = validation
        self._test = test
        self.test_reads = 0

    @property
    def test(self) -> SplitPart:
        self.test_reads += 1
        return self._test


def _cut(items: list, ratios: tuple[float, float, float]) -> tuple[list, list, list]:
    """Floor-based sizing with the remainder assigned to test."""
    n = len(items)
    n_train = int(ratios[0] * n)
    n_val = int(ratios[1] * n)
    return (items[:n_train],
            items[n_train:n_train + n_val],
            items[n_train + n_val:])


def split_dataset(seeds: AlignmentSeeds, dangling_ids, ratios, rng_seed: int) -> DatasetSplit:
    """Partition seeds and dangling ids with the same ratio triple.

    Shuffles deterministically from `rng_seed`, sizes partitions by
    floor, and gives the remainder to test.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise ValueError("ratios must have exactly 3 entries")
    if any(r < 0.0 or r > 1.0 for r in ratios):
        raise ValueError(f"ratios must lie in [0, 1], got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    if len(seeds) == 0:
        raise DataError("cannot split an empty seed set")
    dangling_ids = list(dangling_ids)
    if not dangling_ids:
        raise DataError("cannot split an empty dangling set")

    rng = np.random.default_rng(rng_seed)
    seed_order = rng.permutation(len(seeds))
    dang_order = rng.permutation(len(dangling_ids))
    shuffled_seeds = [seeds.pairs[i] for i in seed_order]
    shuffled_dang = [dangling_ids[i] for i in dang_order]

    s_train, s_val, s_test = _cut(shuffled_seeds, ratios)
    d_train, d_val, d_test = _cut(shuffled_dang, ratios)
    return DatasetSplit(
        SplitPart(s_train, d_train),
        SplitPart(s_val, d_val),
        SplitPart(s_test, d_test),
    )

"""Synthetic KG-pair generator with known ground truth.

Builds a random core graph, copies it (relabeled) into the target KG,
optionally rewires a fraction of target core triples, and attaches
dangling entities on both sides so they are structurally embedded.
Desk-scale stand-in for large cross-lingual dumps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError, DataError
from .kg import KnowledgeGraph, AlignmentSeeds, save_kg, save_links


@dataclass
class SynthConfig:
    n_matchable: int = 1000
    n_dangling_source: int = 250
    n_dangling_target: int = 250
    n_relations: int = 20
    avg_degree: float = 4.0          # expected triples per core entity
    edge_noise: float = 0.0          # fraction of target core triples rewired
    rng_seed: int = 0
    degree_skew: float = 0.0         # >0 biases sampling toward low-id hub entities

    def validate(self) -> None:
        if self.n_matchable < 1:
            raise ConfigError("n_matchable must be >= 1")
        if min(self.n_dangling_source, self.n_dangling_target, self.n_relations) < 0:
            raise ConfigError("counts must be >= 0")
        if self.n_relations < 1:
            raise ConfigError("need at least one relation")
        if self.avg_degree <= 0:
            raise ConfigError("avg_degree must be > 0")
        if not 0.0 <= self.edge_noise <= 1.0:
            raise ConfigError("edge_noise must lie in [0, 1]")
        if self.degree_skew < 0:
            raise ConfigError("degree_skew must be >= 0")


@dataclass
class SynthResult:
    source: KnowledgeGraph
    target: KnowledgeGraph
    seeds: AlignmentSeeds
    source_dangling: list[int]
    target_dangling: list[int]
    meta: dict


def _entity_weights(n: int, skew: float) -> np.ndarray | None:
    if skew <= 0:
        return None
    w = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** skew
    return w / w.sum()


def _sample_core_triples(n_ent: int, n_rel: int, n_edges: int, skew: float,
                         rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """Sample n_edges distinct (h, r, t) with h != t, plus coverage triples
    so no entity is left isolated."""
    capacity = n_ent * max(n_ent - 1, 0) * n_rel
    if n_edges > capacity:
        raise ConfigError(
            f"avg_degree demands {n_edges} triples but the simple-graph "
            f"capacity is {capacity}")
    weights = _entity_weights(n_ent, skew)
    seen: set[tuple[int, int, int]] = set()
    triples: list[tuple[int, int, int]] = []
    while len(triples) < n_edges:
        want = n_edges - len(triples)
        batch = max(want * 2, 64)
        if weights is None:
            hs = rng.integers(0, n_ent, size=batch)
            ts = rng.integers(0, n_ent, size=batch)
        else:
            hs = rng.choice(n_ent, size=batch, p=weights)
            ts = rng.choice(n_ent, size=batch, p=weights)
        rs = rng.integers(0, n_rel, size=batch)
        for h, r, t in zip(hs, rs, ts):
            if h == t:
                continue
            key = (int(h), int(r), int(t))
            if key in seen:
                continue
            seen.add(key)
            triples.append(key)
            if len(triples) == n_edges:
                break
    # connect any entity the random pass missed
    used = set()
    for h, _, t in triples:
        used.add(h)
        used.add(t)
    for e in range(n_ent):
        if e in used:
            continue
        for _ in range(1000):
            other = int(rng.integers(0, n_ent))
            if other == e:
                continue
            r = int(rng.integers(0, n_rel))
            key = (e, r, other) if rng.random() < 0.5 else (other, r, e)
            if key not in seen:
                seen.add(key)
                triples.append(key)
                break
        else:
            raise DataError(f"could not attach isolated entity {e}")
    return triples


def _attach_dangling(core_n: int, n_dangling: int, n_rel: int, n_attach: int,
                     seen: set, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    """Attach each dangling entity (ids core_n..core_n+n_dangling-1) to the
    core with n_attach random triples."""
    triples = []
    for d in range(core_n, core_n + n_dangling):
        made = 0
        attempts = 0
        while made < n_attach:
            attempts += 1
            if attempts > 1000 * n_attach:
                raise DataError(f"could not attach dangling entity {d}")
            partner = int(rng.integers(0, core_n))
            r = int(rng.integers(0, n_rel))
            key = (d, r, partner) if rng.random() < 0.5 else (partner, r, d)
            if key in seen:
                continue
            seen.add(key)
            triples.append(key)
            made += 1
    return triples


def _rewire(core_triples: list[tuple[int, int, int]], n_ent_total: int,
            noise: float, rng: np.random.Generator) -> tuple[list, int]:
    """Rewire the tail of floor(noise * n) distinct core triples."""
    n_perturb = int(noise * len(core_triples))
    if n_perturb == 0:
        return list(core_triples), 0
    picked = rng.choice(len(core_triples), size=n_perturb, replace=False)
    out = list(core_triples)
    present = set(out)
    for idx in sorted(int(i) for i in picked):
        h, r, t = out[idx]
        for _ in range(1000):
            new_t = int(rng.integers(0, n_ent_total))
            if new_t == h or new_t == t:
                continue
            key = (h, r, new_t)
            if key in present:
                continue
            present.discard((h, r, t))
            present.add(key)
            out[idx] = key
            break
        else:
            raise DataError("rewire failed: graph too dense for noise level")
    return out, n_perturb


def generate(cfg: SynthConfig) -> SynthResult:
    """Generate a KG pair; deterministic for a given rng_seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.n_matchable
    n_edges = int(round(n * cfg.avg_degree))
    core = _sample_core_triples(n, cfg.n_relations, n_edges, cfg.degree_skew, rng)

    n_attach = max(1, int(round(cfg.avg_degree / 2)))
    src_seen = set(core)
    src_dangling_triples = _attach_dangling(
        n, cfg.n_dangling_source, cfg.n_relations, n_attach, src_seen, rng)

    target_core, n_perturbed = _rewire(core, n, cfg.edge_noise, rng)
    tgt_seen = set(target_core)
    tgt_dangling_triples = _attach_dangling(
        n, cfg.n_dangling_target, cfg.n_relations, n_attach, tgt_seen, rng)

    def src_name(e):
        return f"s{e}"

    def tgt_name(e):
        return f"t{e}"

    def rel_name(r):
        return f"r{r}"

    src_rows = [(src_name(h), rel_name(r), src_name(t))
                for h, r, t in core + src_dangling_triples]
    tgt_rows = [(tgt_name(h), rel_name(r), tgt_name(t))
                for h, r, t in target_core + tgt_dangling_triples]
    source = KnowledgeGraph.from_string_triples(src_rows)
    target = KnowledgeGraph.from_string_triples(tgt_rows)

    pairs = [(source.entity_id(src_name(i)), target.entity_id(tgt_name(i)))
             for i in range(n)]
    seeds = AlignmentSeeds(pairs)
    source_dangling = [source.entity_id(src_name(n + j))
                       for j in range(cfg.n_dangling_source)]
    target_dangling = [target.entity_id(tgt_name(n + j))
                       for j in range(cfg.n_dangling_target)]

    meta = dict(asdict(cfg))
    meta.update(
        n_core_triples=len(core),
        n_perturbed=n_perturbed,
        n_attach_per_dangling=n_attach,
        n_source_triples=len(source.triples),
        n_target_triples=len(target.triples),
    )
    return SynthResult(source, target, seeds, source_dangling, target_dangling, meta)


FILE_NAMES = {
    "source": "source_triples.tsv",
    "target": "target_triples.tsv",
    "links": "links.tsv",
    "source_dangling": "source_dangling.tsv",
    "target_dangling": "target_dangling.tsv",
    "meta": "meta.json",
}


def write_dataset(result: SynthResult, outdir) -> None:
    """Write the generated pair in the standard file layout."""
    import os

    os.makedirs(outdir, exist_ok=True)
    save_kg(result.source, os.path.join(outdir, FILE_NAMES["source"]))
    save_kg(result.target, os.path.join(outdir, FILE_NAMES["target"]))
    save_links(result.seeds, result.source, result.target,
               os.path.join(outdir, FILE_NAMES["links"]))
    with open(os.path.join(outdir, FILE_NAMES["source_dangling"]), "w",
              encoding="utf-8") as fh:
        for e in result.source_dangling:
            fh.write(result.source.entities[e] + "\n")
    with open(os.path.join(outdir, FILE_NAMES["target_dangling"]), "w",
              encoding="utf-8") as fh:
        for e in result.target_dangling:
            fh.write(result.target.entities[e] + "\n")
    with open(os.path.join(outdir, FILE_NAMES["meta"]), "w", encoding="utf-8") as fh:
        json.dump(result.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

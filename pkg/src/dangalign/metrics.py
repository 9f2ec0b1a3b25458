"""Relaxed and consolidated evaluation protocols.

Relaxed: rank every target entity for each test matchable source and
report H@1, H@k, MRR. Consolidated: detect first, align the predicted
matchable remainder, and let detection errors propagate into the
two-step alignment precision/recall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .search import rank_of, top1


@dataclass
class RelaxedReport:
    hits_at_1: float
    hits_at_10: float
    mrr: float

    def as_dict(self) -> dict:
        return {"hits_at_1": self.hits_at_1, "hits_at_10": self.hits_at_10,
                "mrr": self.mrr}


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float


def _prf(tp: int, fp: int, fn: int) -> PRF:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f1)


@dataclass
class ConsolidatedReport:
    detection: PRF
    alignment: PRF

    def as_dict(self) -> dict:
        return {
            "detection_precision": self.detection.precision,
            "detection_recall": self.detection.recall,
            "detection_f1": self.detection.f1,
            "alignment_precision": self.alignment.precision,
            "alignment_recall": self.alignment.recall,
            "alignment_f1": self.alignment.f1,
        }


def relaxed_eval(mapper: np.ndarray, ent_source: np.ndarray,
                 ent_target: np.ndarray, pairs, k_max: int = 10) -> RelaxedReport:
    """Rank all target entities per test source; report H@1, H@k_max, MRR."""
    pairs = np.asarray(pairs)
    if pairs.size == 0:
        raise ValueError("relaxed evaluation needs at least one test pair")
    mapped = ent_source[pairs[:, 0]].astype(np.float64) @ mapper.astype(np.float64).T
    ranks = rank_of(mapped, ent_target, pairs[:, 1])
    return RelaxedReport(
        hits_at_1=float(np.mean(ranks == 1)),
        hits_at_10=float(np.mean(ranks <= k_max)),
        mrr=float(np.mean(1.0 / ranks)),
    )


def detection_eval(predicted_dangling, true_dangling) -> PRF:
    """P/R/F1 with dangling as the positive class."""
    pred = np.asarray(predicted_dangling, dtype=bool)
    truth = np.asarray(true_dangling, dtype=bool)
    if pred.shape != truth.shape:
        raise ValueError("prediction/label shape mismatch")
    tp = int(np.sum(pred & truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    return _prf(tp, fp, fn)


def consolidated_eval(mapper: np.ndarray, ent_source: np.ndarray,
                      ent_target: np.ndarray, test_pairs, test_dangling,
                      detector, target_candidates=None) -> ConsolidatedReport:
    """Two-step protocol over matchable pairs plus dangling sources.

    `detector` maps an array of source ids to boolean is-dangling flags
    for the whole evaluation set at once (threshold policies may depend
    on the full set). Sources predicted matchable are aligned to their
    top-1 candidate; a truly dangling source predicted matchable can
    only hurt precision, a matchable source predicted dangling is a
    propagated miss counted against recall.
    """
    test_pairs = list(test_pairs)
    test_dangling = list(test_dangling)
    if not test_pairs and not test_dangling:
        raise ValueError("consolidated evaluation needs a non-empty test set")

    sources = np.asarray([s for s, _ in test_pairs] + test_dangling, dtype=np.int64)
    truth_dangling = np.zeros(len(sources), dtype=bool)
    truth_dangling[len(test_pairs):] = True
    true_target = {s: t for s, t in test_pairs}

    pred_dangling = np.asarray(detector(sources), dtype=bool)
    detection = detection_eval(pred_dangling, truth_dangling)

    if target_candidates is None:
        candidates = ent_target
        cand_ids = np.arange(ent_target.shape[0])
    else:
        cand_ids = np.asarray(target_candidates, dtype=np.int64)
        candidates = ent_target[cand_ids]

    kept = sources[~pred_dangling]
    correct = 0
    if kept.size:
        mapped = kept.astype(np.int64)
        q = ent_source[mapped].astype(np.float64) @ mapper.astype(np.float64).T
        best = cand_ids[top1(q, candidates)]
        for sid, bid in zip(kept, best):
            if true_target.get(int(sid)) == int(bid):
                correct += 1
    n_pred_matchable = int(kept.size)
    n_true_matchable = len(test_pairs)
    p = correct / n_pred_matchable if n_pred_matchable else 0.0
    r = correct / n_true_matchable if n_true_matchable else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return ConsolidatedReport(detection, PRF(p, r, f1))


def format_report(values: dict, title: str) -> str:
    """Small aligned two-column table for terminal output."""
    width = max(len(k) for k in values)
    lines = [title, "-" * len(title)]
    for key, val in values.items():
        if isinstance(val, float):
            lines.append(f"{key:<{width}}  {val:.4f}")
        else:
            lines.append(f"{key:<{width}}  {val}")
    return "\n".join(lines) + "\n"


def write_kv(path, values: dict) -> None:
    """Flat machine-readable `key value` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in values.items():
            if isinstance(val, float):
                fh.write(f"{key} {val:.10g}\n")
            else:
                fh.write(f"{key} {val}\n")


def read_kv(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, val = line.split(" ", 1)
            try:
                out[key] = float(val)
            except ValueError:
                out[key] = val
    return out

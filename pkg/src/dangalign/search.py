"""Exact cosine top-k search between embedding spaces, plus hubness counts.

Similarities are computed block-tiled with 64-bit accumulation; ranking
ties are broken by ascending candidate id so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_BLOCK = 512


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"cosine needs two equal-length vectors, got {u.shape} / {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for a zero vector")
    return float(np.clip(np.dot(u / nu, v / nv), -1.0, 1.0))


def normalize_rows(x: np.ndarray) -> np.ndarray:
    """Rows scaled to unit L2 norm (float64); raises on zero rows."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise ValueError(f"zero vector at row {int(np.argmin(norms))}")
    return x / norms[:, None]


def similarity_matrix(queries: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """(n_q, n_c) cosine matrix, computed in float64 blocks."""
    qn = normalize_rows(queries)
    cn = normalize_rows(candidates)
    out = np.empty((qn.shape[0], cn.shape[0]), dtype=np.float64)
    for lo in range(0, qn.shape[0], _BLOCK):
        hi = min(lo + _BLOCK, qn.shape[0])
        out[lo:hi] = qn[lo:hi] @ cn.T
    np.clip(out, -1.0, 1.0, out=out)
    return out


def top_k(queries: np.ndarray, candidates: np.ndarray, k: int):
    """Exact top-k per query.

    Returns (ids, sims), each (n_q, k') with k' = min(k, n_candidates),
    similarities non-increasing and ties resolved by ascending id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if candidates.shape[0] == 0:
        raise ValueError("candidate set is empty")
    sims = similarity_matrix(queries, candidates)
    kk = min(k, candidates.shape[0])
    # stable argsort on -sims keeps ascending id order within ties
    order = np.argsort(-sims, axis=1, kind="stable")[:, :kk]
    picked = np.take_along_axis(sims, order, axis=1)
    return order, picked


def top1(queries: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    ids, _ = top_k(queries, candidates, 1)
    return ids[:, 0]


def rank_of(queries: np.ndarray, candidates: np.ndarray,
            true_ids: np.ndarray) -> np.ndarray:
    """1-based rank of each query's true candidate under top_k ordering."""
    sims = similarity_matrix(queries, candidates)
    true_ids = np.asarray(true_ids)
    rows = np.arange(sims.shape[0])
    s_true = sims[rows, true_ids]
    higher = (sims > s_true[:, None]).sum(axis=1)
    tied_before = ((sims == s_true[:, None])
                   & (np.arange(sims.shape[1])[None, :] < true_ids[:, None])).sum(axis=1)
    return higher + tied_before + 1


@dataclass
class HubnessReport:
    """How often each candidate is some query's top-1 neighbor."""

    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def top(self, n: int) -> list[tuple[int, int]]:
        """Top-n (candidate-id, count), count descending, id ascending."""
        ranked = sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return ranked[:n]


def hubness(top1_ids) -> HubnessReport:
    """Count top-1 occurrences per candidate."""
    top1_ids = np.asarray(top1_ids, dtype=np.int64)
    if top1_ids.size == 0:
        return HubnessReport({})
    counts = np.bincount(top1_ids)
    return HubnessReport({int(i): int(c) for i, c in enumerate(counts) if c > 0})

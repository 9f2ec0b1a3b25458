"""Base alignment learning: translational triple loss, the linear mapping
loss over seed pairs, and the batch contrastive (NCA-style) loss.

Every loss returns (value, gradients). Gradients for embedding tables are
dense arrays of the table's shape so the same code path serves training
and finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nnet import STORAGE_DTYPE, sum64, xavier_init


@dataclass
class EmbeddingTable:
    """Entity and relation vectors for one KG."""

    entities: np.ndarray   # (n_entities, dim)
    relations: np.ndarray  # (n_relations, dim)

    @property
    def dim(self) -> int:
        return self.entities.shape[1]


def init_table(n_entities: int, n_relations: int, dim: int,
               rng: np.random.Generator, dtype=STORAGE_DTYPE) -> EmbeddingTable:
    return EmbeddingTable(
        entities=xavier_init(n_entities, dim, rng, dtype=dtype),
        relations=xavier_init(n_relations, dim, rng, dtype=dtype),
    )


def clip_entity_norms(entities: np.ndarray) -> None:
    """Rescale rows with L2 norm > 1 back onto the unit sphere, in place."""
    norms = np.linalg.norm(entities.astype(np.float64, copy=False), axis=1)
    over = norms > 1.0
    if np.any(over):
        entities[over] = (entities[over] / norms[over, None]).astype(entities.dtype)


def sample_negatives(n_entities: int, batch_size: int, n_per_triple: int,
                     rng: np.random.Generator):
    """Uniform corrupt ids plus a corrupt-tail-vs-head coin per sample."""
    neg_ids = rng.integers(0, n_entities, size=(batch_size, n_per_triple))
    corrupt_tail = rng.random(size=(batch_size, n_per_triple)) < 0.5
    return neg_ids, corrupt_tail


def _safe_unit(diff: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """diff / norms with zero rows mapped to zero (hinge-inactive anyway)."""
    unit = np.zeros_like(diff)
    nz = norms > 0
    unit[nz] = diff[nz] / norms[nz][..., None]
    return unit


def triple_loss(entities: np.ndarray, relations: np.ndarray,
                triples: np.ndarray, neg_ids: np.ndarray,
                corrupt_tail: np.ndarray, margin: float):
    """Margin ranking over corrupted triples.

    loss = (1/B) sum_i sum_j max(0, margin + ||h+r-t|| - ||h'+r-t'||)
    where negative j of triple i replaces the tail (corrupt_tail) or the
    head with neg_ids[i, j].
    Returns (loss, d_entities, d_relations) with dense gradients.
    """
    triples = np.asarray(triples)
    if triples.size == 0:
        raise ValueError("triple batch must be non-empty")
    b, n_neg = neg_ids.shape
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    eh, er, et = entities[h], relations[r], entities[t]

    pos_diff = eh + er - et                                   # (B, d)
    pos_norm = np.linalg.norm(pos_diff.astype(np.float64), axis=1)

    neg_vecs = entities[neg_ids]                              # (B, K, d)
    # corrupted triple: keep (h, r) and swap tail, or keep (r, t) and swap head
    neg_diff = np.where(corrupt_tail[..., None],
                        (eh + er)[:, None, :] - neg_vecs,
                        neg_vecs + er[:, None, :] - et[:, None, :])
    neg_norm = np.linalg.norm(neg_diff.astype(np.float64), axis=2)

    hinge = margin + pos_norm[:, None] - neg_norm             # (B, K)
    active = hinge > 0
    loss = sum64(np.where(active, hinge, 0.0)) / b

    d_ent = np.zeros_like(entities, dtype=np.float64)
    d_rel = np.zeros_like(relations, dtype=np.float64)
    if np.any(active):
        pos_unit = _safe_unit(pos_diff.astype(np.float64), pos_norm)
        neg_unit = _safe_unit(neg_diff.astype(np.float64), neg_norm)
        w_pos = active.sum(axis=1).astype(np.float64) / b     # (B,)
        np.add.at(d_ent, h, w_pos[:, None] * pos_unit)
        np.add.at(d_ent, t, -w_pos[:, None] * pos_unit)
        np.add.at(d_rel, r, w_pos[:, None] * pos_unit)

        w_neg = np.where(active, -1.0 / b, 0.0)               # (B, K)
        g_neg = w_neg[..., None] * neg_unit                   # (B, K, d)
        tail_mask = corrupt_tail[..., None]
        # d||h+r-n|| contributions: +g to h and r, -g to n
        np.add.at(d_ent, np.broadcast_to(h[:, None], (b, n_neg)),
                  np.where(tail_mask, g_neg, 0.0))
        np.add.at(d_ent, neg_ids, np.where(tail_mask, -g_neg, 0.0))
        # d||n+r-t|| contributions: +g to n and r, -g to t
        np.add.at(d_ent, neg_ids, np.where(tail_mask, 0.0, g_neg))
        np.add.at(d_ent, np.broadcast_to(t[:, None], (b, n_neg)),
                  np.where(tail_mask, 0.0, -g_neg))
        np.add.at(d_rel, np.broadcast_to(r[:, None], (b, n_neg)), g_neg)

    return loss, d_ent.astype(entities.dtype), d_rel.astype(relations.dtype)


def mapping_loss(mapper: np.ndarray, ent_source: np.ndarray,
                 ent_target: np.ndarray, pairs: np.ndarray):
    """Mean || M x_s - x_t ||_2 over seed pairs.

    Returns (loss, d_mapper, d_ent_source, d_ent_target).
    """
    pairs = np.asarray(pairs)
    if pairs.size == 0:
        raise ValueError("seed batch must be non-empty")
    src, tgt = pairs[:, 0], pairs[:, 1]
    x = ent_source[src].astype(np.float64)
    y = ent_target[tgt].astype(np.float64)
    m = mapper.astype(np.float64)
    b = len(pairs)

    resid = x @ m.T - y
    norms = np.linalg.norm(resid, axis=1)
    loss = sum64(norms) / b

    unit = _safe_unit(resid, norms)
    d_m = unit.T @ x / b
    d_x = unit @ m / b
    d_y = -unit / b

    d_src = np.zeros_like(ent_source, dtype=np.float64)
    d_tgt = np.zeros_like(ent_target, dtype=np.float64)
    np.add.at(d_src, src, d_x)
    np.add.at(d_tgt, tgt, d_y)
    return (loss, d_m.astype(mapper.dtype),
            d_src.astype(ent_source.dtype), d_tgt.astype(ent_target.dtype))


def cosine_matrix(u: np.ndarray, v: np.ndarray):
    """Pairwise cosine matrix S with a cache for the backward pass."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u, axis=1)
    nv = np.linalg.norm(v, axis=1)
    if np.any(nu == 0.0) or np.any(nv == 0.0):
        raise ValueError("cosine matrix undefined for zero vectors")
    uh = u / nu[:, None]
    vh = v / nv[:, None]
    s = uh @ vh.T
    return s, (uh, vh, nu, nv, s)


def cosine_matrix_backward(cache, d_s: np.ndarray):
    """Gradients of sum(d_s * S) with respect to the raw u and v rows."""
    uh, vh, nu, nv, s = cache
    row_coef = np.sum(d_s * s, axis=1)
    col_coef = np.sum(d_s * s, axis=0)
    d_u = (d_s @ vh - row_coef[:, None] * uh) / nu[:, None]
    d_v = (d_s.T @ uh - col_coef[:, None] * vh) / nv[:, None]
    return d_u, d_v


def nca_loss(s: np.ndarray, alpha: float, beta: float):
    """Batch contrastive loss over a square similarity matrix.

    L = (1/N) sum_i [ log(1 + sum_{m!=i} e^{a S_im}) / a
                    + log(1 + sum_{n!=i} e^{a S_ni}) / a
                    - log(1 + b e^{S_ii}) ]
    Returns (loss, dL/dS). May be negative: the diagonal term dominates
    when positives are strong.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"similarity matrix must be square, got {s.shape}")
    n = s.shape[0]
    if n < 1:
        raise ValueError("similarity matrix must be non-empty")
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")

    e = np.exp(alpha * s)
    off = e.copy()
    np.fill_diagonal(off, 0.0)
    row = off.sum(axis=1, dtype=np.float64)
    col = off.sum(axis=0, dtype=np.float64)
    diag = np.diagonal(s)
    pos = beta * np.exp(diag)

    loss = (sum64(np.log1p(row)) / alpha
            + sum64(np.log1p(col)) / alpha
            - sum64(np.log1p(pos))) / n

    d_s = off / (1.0 + row)[:, None] + off / (1.0 + col)[None, :]
    np.fill_diagonal(d_s, -pos / (1.0 + pos))
    d_s /= n
    return loss, d_s

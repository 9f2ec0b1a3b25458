"""Dangling-entity detection: first-order ranking losses, mixed
first/second-order proximity features, the feed-forward classifier, and
mean-threshold inference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nnet import Adam, FeedForwardNet, STORAGE_DTYPE, sum64
from .search import top_k

PROB_CLAMP = 1e-7


@dataclass
class DetectConfig:
    k: int = 5                 # nearest targets per source
    m: int = 5                 # nearest sources per retrieved target
    margin: float = 0.9        # distance margin for MR / background distance for BR
    br_samples: int = 5        # sampled targets per dangling entity (BR)
    classifier_hidden: int = 128

    def validate(self) -> None:
        if self.k < 1 or self.m < 1:
            raise ValueError("k and m must be >= 1")
        if self.margin <= 0:
            raise ValueError("margin must be > 0")
        if self.br_samples < 1:
            raise ValueError("br_samples must be >= 1")

    @property
    def feature_dim(self) -> int:
        return self.k * (1 + self.m)


def mr_loss(mapper: np.ndarray, x_batch: np.ndarray, nn_batch: np.ndarray,
            margin: float):
    """Marginal ranking: mean max(0, margin - ||M x - x_nn||).

    Minimizing pushes each dangling entity at least `margin` away from
    its nearest target. Returns (loss, d_mapper, d_x, d_nn).
    """
    if x_batch.shape[0] == 0:
        raise ValueError("dangling batch must be non-empty")
    b = x_batch.shape[0]
    x = x_batch.astype(np.float64)
    y = nn_batch.astype(np.float64)
    m = mapper.astype(np.float64)
    resid = x @ m.T - y
    norms = np.linalg.norm(resid, axis=1)
    hinge = margin - norms
    active = hinge > 0
    loss = sum64(np.where(active, hinge, 0.0)) / b

    unit = np.zeros_like(resid)
    nz = active & (norms > 0)
    unit[nz] = resid[nz] / norms[nz, None]
    w = np.where(active, -1.0 / b, 0.0)
    w_unit = w[:, None] * unit
    d_m = w_unit.T @ x
    d_x = w_unit @ m
    d_nn = -w_unit
    return (loss, d_m.astype(mapper.dtype), d_x.astype(x_batch.dtype),
            d_nn.astype(nn_batch.dtype))


def br_loss(mapper: np.ndarray, x_batch: np.ndarray, ent_target: np.ndarray,
            br_samples: int, margin: float, rng: np.random.Generator):
    """Background ranking: mean | ||M x - x_v|| - margin | over sampled
    target entities v, holding dangling entities at a fixed background
    distance. Returns (loss, d_mapper, d_x, d_ent_target) with a dense
    target-table gradient.
    """
    if x_batch.shape[0] == 0:
        raise ValueError("dangling batch must be non-empty")
    if br_samples < 1:
        raise ValueError("br_samples must be >= 1")
    b = x_batch.shape[0]
    sample_ids = rng.integers(0, ent_target.shape[0], size=(b, br_samples))
    x = x_batch.astype(np.float64)
    v = ent_target[sample_ids].astype(np.float64)        # (B, S, d)
    m = mapper.astype(np.float64)
    mapped = x @ m.T                                     # (B, d)
    resid = mapped[:, None, :] - v                       # (B, S, d)
    norms = np.linalg.norm(resid, axis=2)
    dev = norms - margin
    loss = sum64(np.abs(dev)) / (b * br_samples)

    unit = np.zeros_like(resid)
    nz = norms > 0
    unit[nz] = resid[nz] / norms[nz][:, None]
    w = np.sign(dev) / (b * br_samples)
    w_unit = w[..., None] * unit                         # (B, S, d)
    d_m = np.einsum("bsd,be->de", w_unit, x)
    d_x = w_unit.sum(axis=1) @ m
    d_tgt = np.zeros_like(ent_target, dtype=np.float64)
    np.add.at(d_tgt, sample_ids, -w_unit)
    return (loss, d_m.astype(mapper.dtype), d_x.astype(x_batch.dtype),
            d_tgt.astype(ent_target.dtype))


def build_features(source_ids, mapper: np.ndarray, ent_source: np.ndarray,
                   ent_target: np.ndarray, k: int, m: int) -> np.ndarray:
    """Proximity profile d = [d1 || d2] per source entity.

    d1: similarities of the k nearest targets of the mapped source,
    descending. d2: one block per retrieved target, each holding the m
    similarities between that target and its nearest mapped sources
    (reverse search over all sources, querying source not excluded),
    blocks in d1 order.
    """
    source_ids = np.asarray(source_ids, dtype=np.int64)
    n_targets = ent_target.shape[0]
    n_sources = ent_source.shape[0]
    if k > n_targets:
        raise ValueError(f"k={k} exceeds the {n_targets} target entities")
    if m > n_sources:
        raise ValueError(f"m={m} exceeds the {n_sources} source entities")

    mapped_all = ent_source.astype(np.float64) @ mapper.astype(np.float64).T
    tgt_ids, d1 = top_k(mapped_all[source_ids], ent_target, k)

    uniq = np.unique(tgt_ids)
    _, rev_sims = top_k(ent_target[uniq], mapped_all, m)
    block_of = {int(t): rev_sims[i] for i, t in enumerate(uniq)}

    feats = np.empty((len(source_ids), k * (1 + m)), dtype=np.float64)
    feats[:, :k] = d1
    for row in range(len(source_ids)):
        for j in range(k):
            lo = k + j * m
            feats[row, lo:lo + m] = block_of[int(tgt_ids[row, j])]
    return feats


@dataclass
class DanglingClassifier:
    """Binary classifier p(dangling | proximity profile)."""

    net: FeedForwardNet

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        out, _ = self.net.forward(features.astype(self.net.layers[0].w.dtype))
        return out[:, 0].astype(np.float64)


def make_classifier(feature_dim: int, hidden: int, rng: np.random.Generator,
                    dtype=STORAGE_DTYPE) -> DanglingClassifier:
    net = FeedForwardNet.create([feature_dim, hidden, 1], ["relu", "sigmoid"],
                                rng, dtype=dtype)
    return DanglingClassifier(net)


def classifier_loss(classifier: DanglingClassifier, features: np.ndarray,
                    labels: np.ndarray):
    """Binary cross-entropy with probabilities clamped away from {0, 1}.

    Labels: 1 = dangling. Returns (loss, param_grads).
    """
    labels = np.asarray(labels, dtype=np.float64)
    if features.shape[0] == 0:
        raise ValueError("classifier batch must be non-empty")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    out, cache = classifier.net.forward(features)
    p_raw = out[:, 0].astype(np.float64)
    p = np.clip(p_raw, PROB_CLAMP, 1.0 - PROB_CLAMP)
    b = labels.shape[0]
    loss = -sum64(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)) / b

    d_p = -(labels / p - (1.0 - labels) / (1.0 - p)) / b
    d_p[(p_raw < PROB_CLAMP) | (p_raw > 1.0 - PROB_CLAMP)] = 0.0
    upstream = d_p[:, None].astype(out.dtype)
    grads, _ = classifier.net.backward(cache, upstream)
    return loss, grads


def train_classifier(classifier: DanglingClassifier, features: np.ndarray,
                     labels: np.ndarray, optimizer: Adam, epochs: int) -> float:
    """Full-batch BCE steps; returns the final loss."""
    params = classifier.net.params()
    loss = float("nan")
    for _ in range(epochs):
        loss, grads = classifier_loss(classifier, features, labels)
        optimizer.step(params, grads)
    return loss


def mean_threshold_decisions(probs: np.ndarray) -> tuple[float, np.ndarray]:
    """Self-referential threshold: mean of the scored set, strict >."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 0:
        raise ValueError("cannot threshold an empty evaluation set")
    threshold = float(np.mean(probs, dtype=np.float64))
    return threshold, probs > threshold


def decide(classifier: DanglingClassifier, features: np.ndarray):
    """Score an evaluation set and threshold at its own mean probability.

    Returns (probabilities, threshold, is_dangling flags).
    """
    probs = classifier.predict_proba(features)
    threshold, flags = mean_threshold_decisions(probs)
    return probs, threshold, flags

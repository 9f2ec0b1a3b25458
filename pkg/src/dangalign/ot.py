"""Distribution-level alignment via a clipped-critic Wasserstein dual.

The critic scores vectors in the target space; ascending its objective
separates target embeddings from mapped source embeddings, while the
mapper objective pulls mapped matchable sources toward high critic
scores and pushes mapped dangling sources toward low ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nnet import Adam, FeedForwardNet, STORAGE_DTYPE


@dataclass
class Critic:
    """Feed-forward scorer with clip-bounded parameters."""

    net: FeedForwardNet
    clip: float

    def params(self) -> dict[str, np.ndarray]:
        return self.net.params()

    def score(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.net.forward(x)
        return out[:, 0]


def make_critic(input_dim: int, hidden: int, clip: float,
                rng: np.random.Generator, dtype=STORAGE_DTYPE) -> Critic:
    """Two-layer critic: input -> hidden (relu) -> 1 (identity).

    Pass hidden=0 for a purely linear critic.
    """
    if clip <= 0:
        raise ValueError("clip bound must be > 0")
    if hidden > 0:
        net = FeedForwardNet.create([input_dim, hidden, 1], ["relu", "identity"],
                                    rng, dtype=dtype)
    else:
        net = FeedForwardNet.create([input_dim, 1], ["identity"], rng, dtype=dtype)
    critic = Critic(net, clip)
    clip_weights(critic)
    return critic


def clip_weights(critic: Critic) -> None:
    """Clamp every critic parameter into [-clip, clip], in place. Idempotent."""
    c = critic.clip
    for tensor in critic.params().values():
        np.clip(tensor, -c, c, out=tensor)


def critic_objective(critic: Critic, mapper: np.ndarray,
                     source_batch: np.ndarray, target_batch: np.ndarray):
    """Dual estimate: mean f(y) over targets - mean f(Mx) over sources.

    Returns (value, critic_grads). The gradients point in the ascent
    direction of the value; callers negate them when feeding a minimizer.
    """
    if source_batch.shape[0] == 0 or target_batch.shape[0] == 0:
        raise ValueError("critic batches must be non-empty")
    mapped = source_batch @ mapper.T
    t_out, t_cache = critic.net.forward(target_batch)
    s_out, s_cache = critic.net.forward(mapped)
    value = (float(np.mean(t_out[:, 0], dtype=np.float64))
             - float(np.mean(s_out[:, 0], dtype=np.float64)))

    up_t = np.full_like(t_out, 1.0 / t_out.shape[0])
    up_s = np.full_like(s_out, -1.0 / s_out.shape[0])
    g_t, _ = critic.net.backward(t_cache, up_t)
    g_s, _ = critic.net.backward(s_cache, up_s)
    grads = {name: g_t[name] + g_s[name] for name in g_t}
    return value, grads


def _mapper_objective(critic: Critic, mapper: np.ndarray,
                      batch: np.ndarray, sign: float):
    """loss = sign * mean f(Mx); gradient w.r.t. the mapper only."""
    if batch.shape[0] == 0:
        raise ValueError("mapper batch must be non-empty")
    mapped = batch @ mapper.T
    out, cache = critic.net.forward(mapped)
    loss = sign * float(np.mean(out[:, 0], dtype=np.float64))
    upstream = np.full_like(out, sign / out.shape[0])
    _, g_in = critic.net.backward(cache, upstream)
    d_m = (g_in.astype(np.float64).T @ batch.astype(np.float64)).astype(mapper.dtype)
    return loss, d_m


def mapper_alignment_objective(critic: Critic, mapper: np.ndarray,
                               source_batch: np.ndarray):
    """Pull mapped matchable sources toward the target distribution:
    loss = -mean f(Mx)."""
    return _mapper_objective(critic, mapper, source_batch, -1.0)


def mapper_dangling_objective(critic: Critic, mapper: np.ndarray,
                              dangling_batch: np.ndarray):
    """Push mapped dangling sources away from the target distribution:
    loss = +mean f(Mx)."""
    return _mapper_objective(critic, mapper, dangling_batch, +1.0)


def ot_round(critic: Critic, mapper: np.ndarray,
             source_pool: np.ndarray, target_pool: np.ndarray,
             dangling_pool: np.ndarray | None,
             critic_opt: Adam, mapper_opt: Adam,
             n_critic: int, batch_size: int, rng: np.random.Generator) -> dict:
    """One adversarial round: n_critic clipped critic ascents, then a
    single mapper step on the combined alignment + repulsion losses.

    Batches are uniform with replacement from the given pools. Returns
    the last dual estimate and the mapper losses.
    """
    if n_critic < 1:
        raise ValueError("n_critic must be >= 1")

    def draw(pool):
        size = min(batch_size, pool.shape[0])
        idx = rng.integers(0, pool.shape[0], size=size)
        return pool[idx]

    params = critic.params()
    value = 0.0
    for _ in range(n_critic):
        value, grads = critic_objective(critic, mapper, draw(source_pool),
                                        draw(target_pool))
        critic_opt.step(params, {k: -g for k, g in grads.items()})
        clip_weights(critic)

    align_loss, d_m = mapper_alignment_objective(critic, mapper, draw(source_pool))
    repel_loss = 0.0
    if dangling_pool is not None and dangling_pool.shape[0] > 0:
        repel_loss, d_m2 = mapper_dangling_objective(critic, mapper,
                                                     draw(dangling_pool))
        d_m = d_m + d_m2
    mapper_opt.step({"mapper": mapper}, {"mapper": d_m})
    return {"dual_estimate": value, "mapper_align_loss": align_loss,
            "mapper_repel_loss": repel_loss}

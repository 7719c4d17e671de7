"""Personalized-PageRank similarity embeddings on a single shared table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .. import _rng
from ..hetgraph import GraphError, NodeRef, TypedGraph
from .matrix import EmbeddingMatrix
from .sgns import _logsig, _sig, log_sigmoid

__all__ = [
    "VerseConfig",
    "ppr_distribution",
    "ppr_monte_carlo",
    "sample_ppr_endpoints",
    "verse_objective",
    "train_verse",
]


@dataclass(frozen=True)
class VerseConfig:
    dim: int = 100
    alpha: float = 0.85
    negatives: int = 3
    steps: int | None = None  # None: 1000 updates per trained node
    lr: float = 0.0025
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.dim < 1 or self.negatives < 0 or self.workers < 1:
            raise ValueError("dim and workers must be >= 1, negatives >= 0")
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")


def _check_source(g: TypedGraph, source, alpha: float) -> int:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not g.frozen:
        raise GraphError("graph must be frozen")
    s = g._resolve(source)
    if g.degree(s) == 0:
        raise GraphError(f"source {g.node(s).token!r} is isolated")
    return s


def ppr_distribution(
    g: TypedGraph, source: NodeRef | int, alpha: float = 0.85, tolerance: float = 1e-10,
    max_iter: int = 100_000,
) -> np.ndarray:
    """Fixed point of ``pi = alpha * pi P + (1 - alpha) * e_source`` by power iteration.

    ``P`` is the uniform random-walk transition matrix. Iteration stops
    once the L1 distance to the fixed point is provably below ``tolerance``.
    """
    s = _check_source(g, source, alpha)
    indptr, indices = g.csr()[:2]
    deg = np.diff(indptr).astype(np.float64)
    safe_deg = np.where(deg > 0, deg, 1.0)
    n = g.num_nodes
    restart = np.zeros(n)
    restart[s] = 1.0 - alpha
    pi = np.zeros(n)
    pi[s] = 1.0
    # the map is an alpha-contraction in L1
    stop = tolerance * (1.0 - alpha) / alpha
    for _ in range(max_iter):
        spread = np.repeat(pi / safe_deg, np.diff(indptr))
        nxt = alpha * np.bincount(indices, weights=spread, minlength=n) + restart
        delta = np.abs(nxt - pi).sum()
        pi = nxt
        if delta <= stop:
            break
    return pi / pi.sum()


@njit(cache=True, inline="always")
def _ppr_endpoint(indptr, indices, s, alpha, state):
    cur = s
    while _rng.uniform(state) < alpha:
        lo, hi = indptr[cur], indptr[cur + 1]
        cur = indices[lo + _rng.randbelow(state, hi - lo)]
    return cur


@njit(cache=True)
def _sample_endpoints(indptr, indices, s, alpha, n, seed):
    state = _rng.new_stream(seed, s, 0)
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _ppr_endpoint(indptr, indices, s, alpha, state)
    return out


def sample_ppr_endpoints(g: TypedGraph, source, alpha: float, n: int, seed: int = 0) -> np.ndarray:
    """Stop nodes of ``n`` restart walks from ``source``; this is the training positive sampler."""
    s = _check_source(g, source, alpha)
    indptr, indices = g.csr()[:2]
    return _sample_endpoints(indptr, indices, s, float(alpha), int(n), np.uint64(_rng.as_seed(seed)))


def ppr_monte_carlo(g: TypedGraph, source, alpha: float = 0.85, n_walks: int = 100_000,
                    seed: int = 0) -> np.ndarray:
    ends = sample_ppr_endpoints(g, source, alpha, n_walks, seed)
    return np.bincount(ends, minlength=g.num_nodes) / n_walks


def verse_objective(source, positive, negatives):
    """Loss ``-log s(u.v+) - sum_k log s(-u.v-_k)`` with exact gradients.

    Returns ``(loss, grad_source, grad_positive, grad_negatives)``. When
    the same table row plays several roles the caller sums the matching
    gradients, as :func:`train_verse` does.
    """
    u = np.asarray(source, dtype=np.float64)
    v = np.asarray(positive, dtype=np.float64)
    neg = np.asarray(negatives, dtype=np.float64)
    if neg.size == 0:
        neg = neg.reshape(0, u.shape[0])
    if u.ndim != 1 or v.shape != u.shape or neg.ndim != 2 or neg.shape[1] != u.shape[0]:
        raise ValueError(
            f"dimension mismatch: source {u.shape}, positive {v.shape}, negatives {neg.shape}"
        )
    sp, sn = u @ v, neg @ u
    loss = -log_sigmoid(sp) - log_sigmoid(-sn).sum()
    gp = np.exp(log_sigmoid(sp)) - 1.0
    gn = np.exp(log_sigmoid(sn))
    return float(loss), gp * v + gn @ neg, gp * u, gn[:, None] * u[None, :]


@njit(cache=True)
def _verse_steps(indptr, indices, nodes, W, alpha, negatives, lr, step_lo, step_hi, state,
                 touched):
    dim = W.shape[1]
    m = nodes.shape[0]
    idx = np.empty(negatives + 2, dtype=np.int64)
    grad = np.empty((negatives + 2, dim), dtype=np.float64)
    loss = 0.0
    for _ in range(step_lo, step_hi):
        s = nodes[_rng.randbelow(state, m)]
        idx[0] = s
        idx[1] = _ppr_endpoint(indptr, indices, s, alpha, state)
        for k in range(negatives):
            idx[k + 2] = nodes[_rng.randbelow(state, m)]
        for d in range(dim):
            grad[0, d] = 0.0
        # all gradients from the pre-step table, then one accumulated update
        for k in range(1, negatives + 2):
            t = idx[k]
            f = 0.0
            for d in range(dim):
                f += W[s, d] * W[t, d]
            if k == 1:
                loss -= _logsig(f)
                g = _sig(f) - 1.0
            else:
                loss -= _logsig(-f)
                g = _sig(f)
            for d in range(dim):
                grad[0, d] += g * W[t, d]
                grad[k, d] = g * W[s, d]
        for k in range(negatives + 2):
            t = idx[k]
            touched[t] = True
            for d in range(dim):
                W[t, d] -= lr * grad[k, d]
    return loss


@njit(cache=True, parallel=True)
def _verse_parallel(indptr, indices, nodes, W, alpha, negatives, lr, steps, seed, n_chunks,
                    touched):
    losses = np.zeros(n_chunks)
    for k in prange(n_chunks):
        lo = steps * k // n_chunks
        hi = steps * (k + 1) // n_chunks
        state = _rng.new_stream(seed, 1, k)
        losses[k] = _verse_steps(indptr, indices, nodes, W, alpha, negatives, lr, lo, hi,
                                 state, touched)
    return losses.sum()


def train_verse(g: TypedGraph, cfg: VerseConfig, return_info: bool = False):
    """Train one shared embedding table so that ``u.v`` tracks PPR similarity.

    Each step draws a source uniformly from non-isolated nodes, a positive
    from the source's PPR distribution by a restart walk, and
    ``cfg.negatives`` uniform nodes, then takes a gradient step on
    :func:`verse_objective`. Only non-isolated nodes are embedded.
    """
    if not g.frozen:
        raise GraphError("graph must be frozen")
    if g.edge_count == 0:
        raise GraphError("cannot train on a graph without edges")
    indptr, indices = g.csr()[:2]
    nodes = np.flatnonzero(np.diff(indptr) > 0).astype(np.int64)
    steps = cfg.steps if cfg.steps is not None else 1000 * nodes.size
    gen = np.random.default_rng(_rng.as_seed(cfg.seed))
    init = ((gen.random((nodes.size, cfg.dim)) - 0.5) / cfg.dim).astype(np.float32)
    W = np.zeros((g.num_nodes, cfg.dim), dtype=np.float32)
    W[nodes] = init
    touched = np.zeros(g.num_nodes, dtype=np.bool_)
    seed = np.uint64(_rng.as_seed(cfg.seed))
    if cfg.workers == 1:
        state = _rng.new_stream(seed, 1, 0)
        loss = _verse_steps(indptr, indices, nodes, W, float(cfg.alpha), cfg.negatives,
                            float(cfg.lr), 0, steps, state, touched)
    else:
        loss = _verse_parallel(indptr, indices, nodes, W, float(cfg.alpha), cfg.negatives,
                               float(cfg.lr), steps, seed, cfg.workers, touched)
    emb = EmbeddingMatrix([g.node(int(i)).token for i in nodes], W[nodes])
    if return_info:
        return emb, {"mean_loss": loss / steps, "steps": steps, "touched": touched[nodes]}
    return emb

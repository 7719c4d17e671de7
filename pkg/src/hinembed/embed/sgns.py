"""Skip-gram with negative sampling over walk corpora."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .. import _rng
from ..walks import WalkCorpus
from .matrix import EmbeddingMatrix

__all__ = [
    "Vocab",
    "SgnsConfig",
    "build_vocab",
    "sgns_objective",
    "count_pairs",
    "train_sgns",
    "log_sigmoid",
]

LR_FLOOR = 1e-4


def log_sigmoid(x):
    """Numerically stable ``log(sigmoid(x))``."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class Vocab:
    node_ids: np.ndarray  # sorted node ids seen in the corpus
    counts: np.ndarray
    noise: np.ndarray  # proportional to counts ** 0.75

    def __len__(self) -> int:
        return int(self.node_ids.size)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.node_ids.tolist(), self.counts.tolist()))

    def row_of(self, num_nodes: int) -> np.ndarray:
        """Dense lookup ``node id -> vocab row`` (``-1`` when absent)."""
        lookup = np.full(max(num_nodes, int(self.node_ids.max()) + 1), -1, dtype=np.int64)
        lookup[self.node_ids] = np.arange(self.node_ids.size)
        return lookup


def build_vocab(corpus: WalkCorpus, power: float = 0.75) -> Vocab:
    if corpus.num_tokens == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    node_ids, counts = np.unique(corpus.tokens, return_counts=True)
    weights = counts.astype(np.float64) ** power
    return Vocab(node_ids, counts, weights / weights.sum())


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    seed: int = 0
    workers: int = 1
    subsample: float = 0.0  # word2vec-style frequency threshold; 0 disables

    def __post_init__(self) -> None:
        for name in ("dim", "window", "negatives", "epochs", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be positive")
        if self.subsample < 0:
            raise ValueError("subsample must be >= 0")


def sgns_objective(center, context, negatives):
    """Loss ``-log s(u.v) - sum_k log s(-u.n_k)`` and its exact gradients.

    Returns ``(loss, grad_center, grad_context, grad_negatives)``.
    ``negatives`` has shape ``(k, dim)`` and may have ``k = 0``.
    """
    u = np.asarray(center, dtype=np.float64)
    v = np.asarray(context, dtype=np.float64)
    neg = np.asarray(negatives, dtype=np.float64)
    if neg.size == 0:
        neg = neg.reshape(0, u.shape[0])
    if u.ndim != 1 or v.shape != u.shape or neg.ndim != 2 or neg.shape[1] != u.shape[0]:
        raise ValueError(
            f"dimension mismatch: center {u.shape}, context {v.shape}, negatives {neg.shape}"
        )
    pos_score = u @ v
    neg_score = neg @ u
    loss = -log_sigmoid(pos_score) - log_sigmoid(-neg_score).sum()
    # d/dx -log s(x) = s(x) - 1 ; d/dx -log s(-x) = s(x)
    g_pos = _sigmoid(pos_score) - 1.0
    g_neg = _sigmoid(neg_score)
    grad_u = g_pos * v + g_neg @ neg
    grad_v = g_pos * u
    grad_neg = g_neg[:, None] * u[None, :]
    return float(loss), grad_u, grad_v, grad_neg


def _sigmoid(x):
    return np.exp(log_sigmoid(x))


def count_pairs(corpus: WalkCorpus, window: int) -> int:
    """Number of (center, context) pairs one epoch generates."""
    lengths = np.diff(corpus.offsets)
    total = 0
    for length in np.unique(lengths):
        i = np.arange(length)
        per_walk = np.minimum(i, window).sum() + np.minimum(length - 1 - i, window).sum()
        total += int(per_walk) * int((lengths == length).sum())
    return total


# kernels --------------------------------------------------------------------


@njit(cache=True, inline="always")
def _logsig(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit(cache=True, inline="always")
def _sig(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def alias_table(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table for O(1) sampling from ``probs``."""
    n = probs.size
    scaled = probs * n / probs.sum()
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    return prob, alias


@njit(cache=True, inline="always")
def _draw(prob, alias, state):
    u = _rng.uniform(state) * prob.shape[0]
    k = np.int64(u)
    if k >= prob.shape[0]:
        k = prob.shape[0] - 1
    return k if u - k < prob[k] else alias[k]


@njit(cache=True, fastmath=True)
def _train_pair(W, C, c, o, prob, alias, negatives, lr, state, neu):
    dim = W.shape[1]
    for d in range(dim):
        neu[d] = 0.0
    loss = 0.0
    for k in range(negatives + 1):
        t = o if k == 0 else _draw(prob, alias, state)
        f = np.float32(0.0)
        for d in range(dim):
            f += W[c, d] * C[t, d]
        x = np.float64(f)
        if k == 0:
            s = _sig(x)
            loss -= _logsig(x)
            g = np.float32((1.0 - s) * lr)
        else:
            s = _sig(x)
            loss -= _logsig(-x)
            g = np.float32(-s * lr)
        for d in range(dim):
            neu[d] += g * C[t, d]
            C[t, d] += g * W[c, d]
    for d in range(dim):
        W[c, d] += neu[d]
    return loss


@njit(cache=True)
def _keep_tokens(walk, keep_prob, state, out):
    n = 0
    for i in range(walk.shape[0]):
        if keep_prob[walk[i]] >= 1.0 or _rng.uniform(state) < keep_prob[walk[i]]:
            out[n] = walk[i]
            n += 1
    return n


@njit(cache=True)
def _run_walks(tokens, offsets, w_lo, w_hi, rows, W, C, prob, alias, window, negatives,
               lr0, done0, stride, total, keep_prob, state):
    """Train on walks ``[w_lo, w_hi)``; returns (loss sum, pairs processed)."""
    neu = np.empty(W.shape[1], dtype=np.float32)
    buf = np.empty(offsets[-1] - offsets[0] + 1, dtype=np.int64)
    loss = 0.0
    done = 0
    subsample = keep_prob.shape[0] > 0
    for wi in range(w_lo, w_hi):
        walk = tokens[offsets[wi]:offsets[wi + 1]]
        if subsample:
            n = _keep_tokens(walk, keep_prob, state, buf)
            walk = buf[:n]
        n = walk.shape[0]
        for i in range(n):
            c = rows[walk[i]]
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                frac = (done0 + stride * done) / total
                lr = lr0 * max(LR_FLOOR, 1.0 - frac)
                loss += _train_pair(W, C, c, rows[walk[j]], prob, alias, negatives, lr, state, neu)
                done += 1
    return loss, done


@njit(cache=True, parallel=True)
def _run_parallel(tokens, offsets, rows, W, C, prob, alias, window, negatives, lr0, done0,
                  total, keep_prob, seed, epoch, n_chunks):
    n_walks = offsets.shape[0] - 1
    losses = np.zeros(n_chunks)
    counts = np.zeros(n_chunks, dtype=np.int64)
    for k in prange(n_chunks):
        lo = n_walks * k // n_chunks
        hi = n_walks * (k + 1) // n_chunks
        state = _rng.new_stream(seed, epoch, k)
        # unsynchronized updates to W and C across chunks
        l, d = _run_walks(tokens, offsets, lo, hi, rows, W, C, prob, alias, window, negatives,
                          lr0, done0, n_chunks, total, keep_prob, state)
        losses[k] = l
        counts[k] = d
    return losses.sum(), counts.sum()


def _keep_probabilities(vocab: Vocab, rows: np.ndarray, threshold: float) -> np.ndarray:
    if threshold <= 0:
        return np.empty(0, dtype=np.float64)
    freq = vocab.counts / vocab.counts.sum()
    keep = (np.sqrt(freq / threshold) + 1.0) * threshold / freq
    out = np.ones(rows.size, dtype=np.float64)
    out[vocab.node_ids] = np.minimum(keep, 1.0)
    return out


def train_sgns(
    corpus: WalkCorpus,
    cfg: SgnsConfig,
    vocab: Vocab | None = None,
    return_losses: bool = False,
):
    """Train skip-gram embeddings for every node that occurs in ``corpus``.

    With ``cfg.workers == 1`` the result is a deterministic function of
    the corpus and seed. With more workers, chunks of walks update the
    shared tables without locking.
    """
    if corpus.num_tokens == 0:
        raise ValueError("empty walk corpus")
    if vocab is None:
        vocab = build_vocab(corpus)
    elif not np.isin(corpus.tokens, vocab.node_ids).all():
        raise ValueError("corpus contains nodes missing from the vocabulary")
    num_nodes = corpus.graph.num_nodes if corpus.graph is not None else 0
    rows = vocab.row_of(max(num_nodes, int(corpus.tokens.max()) + 1))
    gen = np.random.default_rng(_rng.as_seed(cfg.seed))
    W = ((gen.random((len(vocab), cfg.dim)) - 0.5) / cfg.dim).astype(np.float32)
    C = np.zeros((len(vocab), cfg.dim), dtype=np.float32)
    prob, alias = alias_table(vocab.noise)
    keep_prob = _keep_probabilities(vocab, rows, cfg.subsample)
    per_epoch = count_pairs(corpus, cfg.window)
    total = float(per_epoch * cfg.epochs)
    seed = np.uint64(_rng.as_seed(cfg.seed))
    losses = []
    for epoch in range(cfg.epochs):
        done0 = float(epoch * per_epoch)
        if cfg.workers == 1:
            state = _rng.new_stream(seed, np.uint64(epoch), np.uint64(0))
            loss, done = _run_walks(corpus.tokens, corpus.offsets, 0, len(corpus), rows, W, C,
                                    prob, alias, cfg.window, cfg.negatives, cfg.initial_lr, done0, 1,
                                    total, keep_prob, state)
        else:
            n_chunks = max(cfg.workers, min(len(corpus), 4 * cfg.workers))
            loss, done = _run_parallel(corpus.tokens, corpus.offsets, rows, W, C, prob, alias,
                                       cfg.window, cfg.negatives, cfg.initial_lr, done0,
                                       total, keep_prob, seed, np.uint64(epoch), n_chunks)
        losses.append(loss / max(done, 1))
    if corpus.graph is not None:
        names = [corpus.graph.node(int(i)).token for i in vocab.node_ids]
    else:
        names = [str(int(i)) for i in vocab.node_ids]
    emb = EmbeddingMatrix(names, W, context=C)
    if return_losses:
        return emb, losses
    return emb

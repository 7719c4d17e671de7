"""Random-walk corpora: uniform, node2vec second-order, and meta-path guided.

Each walk ``(start, walk_index)`` draws from its own random stream, so a
corpus depends only on the graph, the config and the seed, never on the
number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO
from urllib.parse import quote, unquote

import numpy as np
from numba import njit, prange

from . import _rng
from .hetgraph import GraphError, MetaPathSchema, NodeRef, TypedGraph, parse_token

__all__ = [
    "WalkConfig",
    "WalkCorpus",
    "uniform_walks",
    "node2vec_walks",
    "metapath_walks",
    "node2vec_step_distribution",
    "write_walks",
    "read_walks",
    "encode_token",
    "decode_token",
]

_UNIFORM, _NODE2VEC, _METAPATH = 0, 1, 2


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    p: float = 1.0
    q: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be positive")


class WalkCorpus:
    """Walks stored flat: ``tokens[offsets[i]:offsets[i + 1]]`` is walk ``i``."""

    def __init__(self, tokens: np.ndarray, offsets: np.ndarray, graph: TypedGraph | None = None):
        self.tokens = np.ascontiguousarray(tokens, dtype=np.int64)
        self.offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        if self.offsets.ndim != 1 or self.offsets.size == 0 or self.offsets[0] != 0:
            raise ValueError("offsets must start at 0")
        if self.offsets[-1] != self.tokens.size:
            raise ValueError("offsets do not cover tokens")
        self.graph = graph

    @classmethod
    def from_walks(cls, walks: Iterable[Iterable[int]], graph: TypedGraph | None = None):
        walks = [np.asarray(list(w), dtype=np.int64) for w in walks]
        offsets = np.zeros(len(walks) + 1, dtype=np.int64)
        np.cumsum([len(w) for w in walks], out=offsets[1:])
        tokens = np.concatenate(walks) if walks else np.empty(0, dtype=np.int64)
        return cls(tokens, offsets, graph)

    def __len__(self) -> int:
        return self.offsets.size - 1

    def __getitem__(self, i: int) -> np.ndarray:
        return self.tokens[self.offsets[i]:self.offsets[i + 1]]

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(len(self)):
            yield self[i]

    @property
    def walks(self) -> list[list[int]]:
        return [w.tolist() for w in self]

    @property
    def num_tokens(self) -> int:
        return int(self.tokens.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WalkCorpus):
            return NotImplemented
        return np.array_equal(self.tokens, other.tokens) and np.array_equal(
            self.offsets, other.offsets
        )

    def __repr__(self) -> str:
        return f"WalkCorpus(walks={len(self)}, tokens={self.num_tokens})"


# kernels --------------------------------------------------------------------


@njit(cache=True)
def _contains(sorted_arr, lo, hi, x):
    while lo < hi:
        mid = (lo + hi) >> 1
        v = sorted_arr[mid]
        if v == x:
            return True
        if v < x:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True)
def _n2v_weights(indptr, indices, prev, cur, p, q, out):
    """Unnormalized second-order weights over ``adj(cur)`` into ``out``; returns their sum."""
    lo, hi = indptr[cur], indptr[cur + 1]
    plo, phi = indptr[prev], indptr[prev + 1]
    total = 0.0
    for k in range(lo, hi):
        x = indices[k]
        if x == prev:
            w = 1.0 / p
        elif _contains(indices, plo, phi, x):
            w = 1.0
        else:
            w = 1.0 / q
        out[k - lo] = w
        total += w
    return total


@njit(cache=True)
def _walk_one(kind, indptr, indices, type_indptr, type_indices, schema_codes,
              start, length, p, q, state, out, weights):
    out[0] = start
    n = 1
    cur = start
    period = schema_codes.shape[0]
    while n < length:
        if kind == _METAPATH:
            t = schema_codes[n % period]
            lo = type_indptr[cur, t]
            hi = type_indptr[cur, t + 1]
            if hi == lo:
                break
            nxt = type_indices[lo + _rng.randbelow(state, hi - lo)]
        else:
            lo, hi = indptr[cur], indptr[cur + 1]
            deg = hi - lo
            if deg == 0:
                break
            if kind == _UNIFORM or n == 1 or (p == 1.0 and q == 1.0):
                nxt = indices[lo + _rng.randbelow(state, deg)]
            else:
                total = _n2v_weights(indptr, indices, out[n - 2], cur, p, q, weights)
                r = _rng.uniform(state) * total
                k = 0
                acc = weights[0]
                while acc <= r and k < deg - 1:
                    k += 1
                    acc += weights[k]
                nxt = indices[lo + k]
        out[n] = nxt
        cur = nxt
        n += 1
    return n


@njit(cache=True, parallel=True)
def _generate(kind, indptr, indices, type_indptr, type_indices, schema_codes,
              starts, walks_per_node, length, p, q, seed):
    n_starts = starts.shape[0]
    n_jobs = n_starts * walks_per_node
    buf = np.empty((n_jobs, length), dtype=np.int64)
    lens = np.zeros(n_jobs, dtype=np.int64)
    max_deg = 1
    for i in range(indptr.shape[0] - 1):
        d = indptr[i + 1] - indptr[i]
        if d > max_deg:
            max_deg = d
    for job in prange(n_jobs):
        r = job // n_starts
        s = starts[job % n_starts]
        state = _rng.new_stream(seed, s, r)
        weights = np.empty(max_deg, dtype=np.float64)
        lens[job] = _walk_one(kind, indptr, indices, type_indptr, type_indices,
                              schema_codes, s, length, p, q, state, buf[job], weights)
    return buf, lens


def _compact(buf: np.ndarray, lens: np.ndarray, graph: TypedGraph) -> WalkCorpus:
    keep = lens >= 2
    lens = lens[keep]
    offsets = np.zeros(lens.size + 1, dtype=np.int64)
    np.cumsum(lens, out=offsets[1:])
    mask = np.arange(buf.shape[1])[None, :] < lens[:, None]
    tokens = buf[keep][mask]
    return WalkCorpus(tokens, offsets, graph)


def _run(kind, g: TypedGraph, cfg: WalkConfig, starts: np.ndarray, schema_codes: np.ndarray):
    if not g.frozen:
        raise GraphError("walks require a frozen graph; call freeze() first")
    indptr, indices, _, type_indptr, type_indices = g.csr()
    if starts.size == 0:
        return WalkCorpus(np.empty(0, np.int64), np.zeros(1, np.int64), g)
    buf, lens = _generate(
        kind, indptr, indices, type_indptr, type_indices, schema_codes,
        starts.astype(np.int64), cfg.walks_per_node, cfg.walk_length,
        float(cfg.p), float(cfg.q), np.uint64(_rng.as_seed(cfg.seed)),
    )
    return _compact(buf, lens, g)


def _non_isolated(g: TypedGraph) -> np.ndarray:
    indptr = g.csr()[0] if g.frozen else None
    if indptr is None:
        raise GraphError("walks require a frozen graph; call freeze() first")
    return np.flatnonzero(np.diff(indptr) > 0)


_NO_SCHEMA = np.zeros(1, dtype=np.int64)


def uniform_walks(g: TypedGraph, cfg: WalkConfig) -> WalkCorpus:
    """``walks_per_node`` uniform random walks from every non-isolated node."""
    return _run(_UNIFORM, g, cfg, _non_isolated(g), _NO_SCHEMA)


def node2vec_walks(g: TypedGraph, cfg: WalkConfig) -> WalkCorpus:
    """Second-order biased walks with return parameter ``p`` and in-out parameter ``q``."""
    return _run(_NODE2VEC, g, cfg, _non_isolated(g), _NO_SCHEMA)


def metapath_walks(g: TypedGraph, schema: MetaPathSchema, cfg: WalkConfig) -> WalkCorpus:
    """Walks whose node types follow ``schema`` cyclically, started from its first type.

    A walk stops early when the current node has no neighbor of the next
    required type; walks shorter than two nodes are dropped.
    """
    if not isinstance(schema, MetaPathSchema):
        schema = MetaPathSchema(tuple(schema))
    schema.validate_for(g)
    codes = np.array([g.type_code(t) for t in schema.types[:-1]], dtype=np.int64)
    node_type = g.csr()[2] if g.frozen else None
    if node_type is None:
        raise GraphError("walks require a frozen graph; call freeze() first")
    starts = np.flatnonzero(node_type == codes[0])
    return _run(_METAPATH, g, cfg, starts, codes)


def node2vec_step_distribution(
    g: TypedGraph, prev: NodeRef | int, cur: NodeRef | int, p: float, q: float
) -> dict[NodeRef, float]:
    """Transition probabilities out of ``cur`` having arrived from ``prev``.

    Weight ``1/p`` returns to ``prev``, ``1`` goes to common neighbors of
    ``prev`` and ``cur``, and ``1/q`` moves further away. Uses the same
    kernel as :func:`node2vec_walks`.
    """
    if not (p > 0 and q > 0):
        raise ValueError("p and q must be positive")
    if not g.frozen:
        raise GraphError("graph must be frozen")
    iprev, icur = g._resolve(prev), g._resolve(cur)
    if not g.has_edge(iprev, icur):
        raise GraphError(f"({g.node(iprev).token}, {g.node(icur).token}) is not an edge")
    indptr, indices = g.csr()[:2]
    lo, hi = indptr[icur], indptr[icur + 1]
    w = np.empty(hi - lo, dtype=np.float64)
    total = _n2v_weights(indptr, indices, iprev, icur, float(p), float(q), w)
    return {g.node(int(x)): float(wx / total) for x, wx in zip(indices[lo:hi], w)}


# serialization --------------------------------------------------------------

_SAFE = "!\"#$&'()*+,-./:;<=>?@[\\]^_`{|}~"


def encode_token(token: str) -> str:
    """Percent-escape whitespace and ``%`` so a token is one space-free word."""
    return quote(token, safe=_SAFE)


def decode_token(word: str) -> str:
    return unquote(word)


def write_walks(corpus: WalkCorpus, fh: TextIO, graph: TypedGraph | None = None) -> None:
    graph = graph or corpus.graph
    if graph is None:
        raise ValueError("a graph is needed to resolve node names")
    names = [encode_token(n.token) for n in graph.nodes()]
    for walk in corpus:
        fh.write(" ".join(names[i] for i in walk) + "\n")


def read_walks(lines: Iterable[str], graph: TypedGraph) -> WalkCorpus:
    """Read a walk file against ``graph``; unknown tokens are rejected."""
    walks = []
    for lineno, line in enumerate(lines, 1):
        words = line.split()
        if not words:
            continue
        walk = []
        for w in words:
            ref = graph.find(*parse_token(decode_token(w)))
            if ref is None:
                raise GraphError(f"walk line {lineno}: unknown node {decode_token(w)!r}")
            walk.append(ref.id)
        walks.append(walk)
    return WalkCorpus.from_walks(walks, graph)

"""Typed heterogeneous graph with type-partitioned adjacency.

Nodes get dense integer ids in insertion order. Neighbor lists are kept
sorted by id so that every traversal has a fixed order. Call
:meth:`TypedGraph.freeze` once construction is done; the frozen graph
exposes CSR arrays used by the walk and training kernels.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np

__all__ = [
    "NodeRef",
    "TypedGraph",
    "MetaPathSchema",
    "GraphError",
    "summarize",
    "read_edgelist",
    "write_edgelist",
    "format_token",
    "parse_token",
]


class GraphError(ValueError):
    """Raised for invalid graph operations or inputs."""


@dataclass(frozen=True, order=True)
class NodeRef:
    id: int
    type: str
    name: str

    @property
    def token(self) -> str:
        return format_token(self.type, self.name)


def _check_label(label: str, what: str) -> str:
    if not isinstance(label, str):
        raise GraphError(f"{what} must be a string, got {type(label).__name__}")
    label = label.strip()
    if not label:
        raise GraphError(f"empty {what}")
    if "\t" in label or "\n" in label or "\r" in label:
        raise GraphError(f"{what} {label!r} contains a tab or newline")
    return label


def format_token(node_type: str, name: str) -> str:
    return f"{node_type}:{name}"


def parse_token(token: str) -> tuple[str, str]:
    node_type, sep, name = token.partition(":")
    if not sep or not node_type or not name:
        raise GraphError(f"malformed node token {token!r}, expected TYPE:name")
    return node_type, name


class TypedGraph:
    """Undirected, unweighted graph whose nodes carry a type label.

    Examples
    --------
    >>> g = TypedGraph()
    >>> a = g.add_node("A", "alice")
    >>> p = g.add_node("P", "p1")
    >>> g.add_edge(a, p)
    True
    >>> [n.name for n in g.neighbors_of_type(a, "P")]
    ['p1']
    """

    def __init__(self) -> None:
        self._types: list[str] = []
        self._type_code: dict[str, int] = {}
        self._node_type: list[int] = []
        self._node_name: list[str] = []
        self._index: dict[tuple[str, str], int] = {}
        self._adj: list[set[int]] = []
        self._edge_count = 0
        self._frozen = False
        self._csr: tuple[np.ndarray, ...] | None = None

    # construction -------------------------------------------------------

    def add_node(self, node_type: str, name: str) -> NodeRef:
        """Return the node for ``(node_type, name)``, creating it if needed."""
        node_type = _check_label(node_type, "node type")
        if ":" in node_type:
            raise GraphError(f"node type {node_type!r} must not contain ':'")
        name = _check_label(name, "node name")
        key = (node_type, name)
        idx = self._index.get(key)
        if idx is not None:
            return NodeRef(idx, node_type, name)
        self._require_mutable()
        code = self._type_code.get(node_type)
        if code is None:
            code = len(self._types)
            self._types.append(node_type)
            self._type_code[node_type] = code
        idx = len(self._node_name)
        self._index[key] = idx
        self._node_type.append(code)
        self._node_name.append(name)
        self._adj.append(set())
        return NodeRef(idx, node_type, name)

    def add_edge(self, u: NodeRef | int, v: NodeRef | int) -> bool:
        """Insert the undirected edge ``u-v``; return False if it already existed."""
        self._require_mutable()
        iu, iv = self._resolve(u), self._resolve(v)
        if iu == iv:
            raise GraphError(f"self-loop on node {self.node(iu).token!r} rejected")
        if iv in self._adj[iu]:
            return False
        self._adj[iu].add(iv)
        self._adj[iv].add(iu)
        self._edge_count += 1
        return True

    def freeze(self) -> "TypedGraph":
        """Make the graph immutable and build its CSR arrays. Returns self."""
        if self._frozen:
            return self
        n = self.num_nodes
        node_type = np.asarray(self._node_type, dtype=np.int64)
        degree = np.fromiter((len(a) for a in self._adj), dtype=np.int64, count=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degree, out=indptr[1:])
        indices = np.empty(indptr[-1], dtype=np.int64)
        for i, nbrs in enumerate(self._adj):
            indices[indptr[i]:indptr[i + 1]] = sorted(nbrs)
        # neighbors regrouped by (type, id); stable sort keeps id order inside a type
        n_types = len(self._types)
        type_indices = np.empty_like(indices)
        type_indptr = np.zeros((n, n_types + 1), dtype=np.int64)
        for i in range(n):
            lo, hi = indptr[i], indptr[i + 1]
            seg = indices[lo:hi]
            seg_types = node_type[seg]
            order = np.argsort(seg_types, kind="stable")
            type_indices[lo:hi] = seg[order]
            counts = np.bincount(seg_types, minlength=n_types)
            type_indptr[i, 0] = lo
            type_indptr[i, 1:] = lo + np.cumsum(counts)
        self._csr = (indptr, indices, node_type, type_indptr, type_indices)
        for arr in self._csr:
            arr.setflags(write=False)
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    # queries ------------------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return len(self._node_name)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    @property
    def node_types(self) -> list[str]:
        return list(self._types)

    def type_code(self, node_type: str) -> int:
        try:
            return self._type_code[node_type]
        except KeyError:
            raise GraphError(f"node type {node_type!r} not present in graph") from None

    def has_type(self, node_type: str) -> bool:
        return node_type in self._type_code

    def node(self, idx: int) -> NodeRef:
        if not 0 <= idx < self.num_nodes:
            raise GraphError(f"unknown node id {idx}")
        return NodeRef(idx, self._types[self._node_type[idx]], self._node_name[idx])

    def nodes(self) -> Iterator[NodeRef]:
        for i in range(self.num_nodes):
            yield self.node(i)

    def find(self, node_type: str, name: str) -> NodeRef | None:
        idx = self._index.get((node_type, name.strip()))
        return None if idx is None else self.node(idx)

    def find_token(self, token: str) -> NodeRef | None:
        return self.find(*parse_token(token))

    def nodes_of_type(self, node_type: str) -> list[NodeRef]:
        code = self._type_code.get(node_type)
        if code is None:
            return []
        return [self.node(i) for i, t in enumerate(self._node_type) if t == code]

    def degree(self, u: NodeRef | int) -> int:
        return len(self._adj[self._resolve(u)])

    def neighbors(self, u: NodeRef | int) -> list[NodeRef]:
        return [self.node(i) for i in sorted(self._adj[self._resolve(u)])]

    def neighbors_of_type(self, u: NodeRef | int, node_type: str) -> list[NodeRef]:
        """Neighbors of ``u`` with the given type, sorted by id."""
        iu = self._resolve(u)
        code = self._type_code.get(node_type)
        if code is None:
            return []
        return [self.node(i) for i in sorted(self._adj[iu]) if self._node_type[i] == code]

    def has_edge(self, u: NodeRef | int, v: NodeRef | int) -> bool:
        return self._resolve(v) in self._adj[self._resolve(u)]

    def edges(self) -> Iterator[tuple[int, int]]:
        """Each undirected edge once as ``(u, v)`` with ``u < v``, ordered by ``u``."""
        for u in range(self.num_nodes):
            for v in sorted(self._adj[u]):
                if u < v:
                    yield u, v

    def csr(self) -> tuple[np.ndarray, ...]:
        """``(indptr, indices, node_type, type_indptr, type_indices)`` of the frozen graph."""
        if self._csr is None:
            raise GraphError("graph must be frozen before kernel access")
        return self._csr

    def _resolve(self, u: NodeRef | int) -> int:
        idx = u.id if isinstance(u, NodeRef) else int(u)
        if not 0 <= idx < self.num_nodes:
            raise GraphError(f"unknown node id {idx}")
        if isinstance(u, NodeRef) and self._node_name[idx] != u.name:
            raise GraphError(f"node {u.token!r} does not belong to this graph")
        return idx

    def _require_mutable(self) -> None:
        if self._frozen:
            raise GraphError("graph is frozen")

    def __repr__(self) -> str:
        return f"TypedGraph(nodes={self.num_nodes}, edges={self.edge_count}, types={self._types})"


@dataclass(frozen=True)
class MetaPathSchema:
    """Ordered node-type sequence that constrains a walk, e.g. ``A-P-A``."""

    types: tuple[str, ...]

    def __post_init__(self) -> None:
        types = tuple(t.strip() for t in self.types)
        if len(types) < 2:
            raise GraphError("a meta-path needs at least two node types")
        if any(not t for t in types):
            raise GraphError("empty node type in meta-path")
        object.__setattr__(self, "types", types)

    @classmethod
    def parse(cls, text: str) -> "MetaPathSchema":
        sep = "," if "," in text else "-"
        return cls(tuple(text.split(sep)))

    @property
    def symmetric(self) -> bool:
        return self.types[0] == self.types[-1]

    @property
    def period(self) -> int:
        return len(self.types) - 1

    def type_at(self, position: int) -> str:
        """Required type of the node at ``position`` of a cyclic walk."""
        return self.types[position % self.period]

    def validate_for(self, graph: TypedGraph) -> None:
        if not self.symmetric:
            raise GraphError(f"meta-path {self} is not symmetric (first type must equal last)")
        missing = [t for t in dict.fromkeys(self.types) if not graph.has_type(t)]
        if missing:
            raise GraphError(f"meta-path {self} uses types absent from graph: {missing}")

    def __str__(self) -> str:
        return "-".join(self.types)


def summarize(g: TypedGraph) -> dict:
    """Per-type node counts and the edge count."""
    counts = Counter(n.type for n in g.nodes())
    return {"nodes": {t: counts[t] for t in g.node_types if counts[t]}, "edges": g.edge_count}


def write_edgelist(g: TypedGraph, fh: TextIO) -> int:
    """Write one ``TYPE:name<TAB>TYPE:name`` line per edge. Returns the line count.

    Lines are canonical (smaller token first, sorted), so a graph read back
    from the file dumps to identical bytes.
    """
    lines = sorted(tuple(sorted((g.node(u).token, g.node(v).token))) for u, v in g.edges())
    for a, b in lines:
        fh.write(f"{a}\t{b}\n")
    return len(lines)


def read_edgelist(lines: Iterable[str], freeze: bool = True) -> TypedGraph:
    g = TypedGraph()
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 2 tab-separated tokens, got {len(parts)}")
        try:
            u = g.add_node(*parse_token(parts[0]))
            v = g.add_node(*parse_token(parts[1]))
            g.add_edge(u, v)
        except GraphError as exc:
            raise GraphError(f"line {lineno}: {exc}") from None
    return g.freeze() if freeze else g

"""Node embedding container and its text format."""

from __future__ import annotations

from typing import Iterable, Sequence, TextIO

import numpy as np

from ..walks import decode_token, encode_token

__all__ = ["EmbeddingMatrix", "write_embeddings", "read_embeddings"]


class EmbeddingMatrix:
    """Map from node token (``TYPE:name``) to a dense vector.

    ``vectors[i]`` belongs to ``nodes[i]``. ``context`` optionally holds
    the output-side vectors of a two-table model.
    """

    def __init__(self, nodes: Sequence[str], vectors: np.ndarray, context: np.ndarray | None = None):
        vectors = np.asarray(vectors)
        if vectors.ndim != 2 or vectors.shape[0] != len(nodes):
            raise ValueError(
                f"vectors of shape {vectors.shape} do not match {len(nodes)} nodes"
            )
        if vectors.shape[1] < 1:
            raise ValueError("embedding dimension must be >= 1")
        if not np.isfinite(vectors).all():
            bad = [nodes[i] for i in np.flatnonzero(~np.isfinite(vectors).all(axis=1))[:5]]
            raise ValueError(f"non-finite embedding entries for {bad}")
        self.nodes = list(nodes)
        self.index = {tok: i for i, tok in enumerate(self.nodes)}
        if len(self.index) != len(self.nodes):
            raise ValueError("duplicate node token in embedding")
        self.vectors = vectors
        self.context = context

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.index[token]]

    def lookup(self, tokens: Iterable[str]) -> np.ndarray:
        return self.vectors[[self.index[t] for t in tokens]]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingMatrix):
            return NotImplemented
        return self.nodes == other.nodes and np.array_equal(self.vectors, other.vectors)

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(nodes={len(self)}, dim={self.dim})"


def write_embeddings(emb: EmbeddingMatrix, fh: TextIO) -> None:
    """Write ``N dim`` then ``TYPE:name v1 ... v_dim`` per node.

    float32 vectors are written with 9 significant digits and float64 with
    17, which round-trips exactly.
    """
    digits = 9 if emb.vectors.dtype == np.float32 else 17
    fh.write(f"{len(emb)} {emb.dim}\n")
    for tok, vec in zip(emb.nodes, emb.vectors):
        fh.write(encode_token(tok) + " " + " ".join(f"{x:.{digits}g}" for x in vec.tolist()) + "\n")


def read_embeddings(lines: Iterable[str], dtype=np.float32) -> EmbeddingMatrix:
    it = iter(lines)
    try:
        header = next(it).split()
    except StopIteration:
        raise ValueError("empty embedding file") from None
    if len(header) != 2:
        raise ValueError("embedding header must be 'N dim'")
    n, dim = int(header[0]), int(header[1])
    nodes, rows = [], []
    for lineno, line in enumerate(it, 2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != dim + 1:
            raise ValueError(f"line {lineno}: expected {dim} values, got {len(parts) - 1}")
        nodes.append(decode_token(parts[0]))
        rows.append([float(x) for x in parts[1:]])
    if len(nodes) != n:
        raise ValueError(f"header announces {n} nodes, file has {len(nodes)}")
    return EmbeddingMatrix(nodes, np.array(rows, dtype=dtype).reshape(n, dim))

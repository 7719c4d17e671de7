from __future__ import annotations

from typing import Sequence

import numpy as np

from ..embed.matrix import EmbeddingMatrix

__all__ = ["hadamard_features", "concat_embeddings"]


def hadamard_features(u_vec, v_vec) -> np.ndarray:
    """Element-wise product of two node vectors (rows of matrices work too)."""
    u = np.asarray(u_vec, dtype=np.float64)
    v = np.asarray(v_vec, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    return u * v


def concat_embeddings(matrices: Sequence[EmbeddingMatrix]) -> EmbeddingMatrix:
    """Concatenate per-node vectors in list order; all inputs must cover the same nodes.

    The output follows the node order of the first matrix.
    """
    if not matrices:
        raise ValueError("need at least one embedding matrix")
    first = matrices[0]
    reference = set(first.nodes)
    for k, m in enumerate(matrices[1:], 1):
        other = set(m.nodes)
        if other != reference:
            only_first = sorted(reference - other)
            only_other = sorted(other - reference)
            raise ValueError(
                f"node sets differ between matrix 0 and matrix {k}: "
                f"{len(only_first)} only in 0 (e.g. {only_first[:5]}), "
                f"{len(only_other)} only in {k} (e.g. {only_other[:5]})"
            )
    blocks = [first.vectors] + [m.lookup(first.nodes) for m in matrices[1:]]
    dtype = np.result_type(*[b.dtype for b in blocks])
    return EmbeddingMatrix(first.nodes, np.hstack(blocks).astype(dtype, copy=False))

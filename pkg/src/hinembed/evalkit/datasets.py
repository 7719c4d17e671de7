"""Labeled datasets for co-authorship prediction and research-area classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Hashable, Iterable, Mapping, Sequence, TextIO

import numpy as np

from ..corpus import AUTHOR, BibRecord
from ..embed.matrix import EmbeddingMatrix
from ..hetgraph import format_token
from .features import hadamard_features

__all__ = [
    "LabeledDataset",
    "sample_nonedges",
    "coauthor_pairs",
    "build_linkpred_dataset",
    "build_area_dataset",
    "write_dataset",
]


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    class_names: tuple[str, ...]
    coverage: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError(f"X {self.X.shape} and y {self.y.shape} disagree")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= len(self.class_names)):
            raise ValueError("labels outside class_names")

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def n_classes(self) -> int:
        return int(np.unique(self.y).size)

    @property
    def rows(self) -> list[tuple[np.ndarray, int]]:
        return list(zip(self.X, self.y.tolist()))

    @property
    def coverage_fraction(self) -> float:
        total = self.coverage.get("total", 0)
        return self.coverage.get("kept", 0) / total if total else 1.0


def _pair(a, b, order: Mapping) -> tuple:
    return (a, b) if order[a] < order[b] else (b, a)


def sample_nonedges(
    positives: Iterable[tuple[Hashable, Hashable]],
    universe: Sequence[Hashable],
    ratio: float,
    seed: int = 0,
) -> set[tuple]:
    """Uniformly sample ``round(ratio * |positives|)`` distinct unordered non-edges.

    Pairs are returned as tuples ordered by position in ``universe``.
    """
    if ratio < 0:
        raise ValueError("ratio must be non-negative")
    order = {u: i for i, u in enumerate(universe)}
    if len(order) != len(universe):
        raise ValueError("universe has duplicate nodes")
    distinct = {frozenset(p) for p in positives}
    pos = set()
    for p in distinct:
        a, b = tuple(p) if len(p) == 2 else (None, None)
        if a in order and b in order:
            pos.add(_pair(a, b, order))
    want = int(round(ratio * len(distinct)))
    n = len(universe)
    available = comb(n, 2) - len(pos)
    if want > available:
        raise ValueError(f"requested {want} non-edges but only {available} exist")
    if want == 0:
        return set()
    rng = np.random.default_rng(seed)
    if want * 2 > available:
        candidates = [
            (universe[i], universe[j])
            for i, j in combinations(range(n), 2)
            if (universe[i], universe[j]) not in pos
        ]
        pick = rng.choice(len(candidates), size=want, replace=False)
        return {candidates[k] for k in np.sort(pick)}
    out: set[tuple] = set()
    while len(out) < want:
        i, j = rng.integers(n, size=2)
        if i == j:
            continue
        pair = (universe[min(i, j)], universe[max(i, j)])
        if pair in pos or pair in out:
            continue
        out.add(pair)
    return out


def coauthor_pairs(records: Iterable[BibRecord]) -> list[tuple[str, str]]:
    """Distinct co-author pairs ``(a, b)`` with ``a < b``, sorted."""
    pairs = set()
    for rec in records:
        for a, b in combinations(rec.authors, 2):
            pairs.add((a, b) if a < b else (b, a))
    return sorted(pairs)


def build_linkpred_dataset(
    eval_records: Sequence[BibRecord],
    embeddings: EmbeddingMatrix,
    ratio: float = 1.0,
    seed: int = 0,
) -> LabeledDataset:
    """Hadamard features of held-out co-author pairs (label 1) and sampled non-pairs (label 0).

    Pairs with an endpoint that has no embedding are dropped; the drop is
    recorded in ``coverage``.
    """
    all_pairs = coauthor_pairs(eval_records)
    tok = lambda a: format_token(AUTHOR, a)  # noqa: E731
    positives = [(a, b) for a, b in all_pairs if tok(a) in embeddings and tok(b) in embeddings]
    if not positives:
        raise ValueError("no co-author pair has both endpoints embedded")
    authors = sorted({a for rec in eval_records for a in rec.authors if tok(a) in embeddings})
    negatives = sorted(sample_nonedges(positives, authors, ratio, seed))
    pairs = positives + negatives
    left = embeddings.lookup([tok(a) for a, _ in pairs])
    right = embeddings.lookup([tok(b) for _, b in pairs])
    X = hadamard_features(left, right)
    y = np.r_[np.ones(len(positives), np.int64), np.zeros(len(negatives), np.int64)]
    coverage = {
        "total": len(all_pairs),
        "kept": len(positives),
        "negatives": len(negatives),
        "authors": len(authors),
    }
    return LabeledDataset(X, y, ("no-coauthor", "coauthor"), coverage)


def build_area_dataset(labels: Mapping[str, str], embeddings: EmbeddingMatrix) -> LabeledDataset:
    """One row per labeled author with an embedding; the feature is the author's vector."""
    authors = sorted(a for a in labels if format_token(AUTHOR, a) in embeddings)
    classes = tuple(sorted({labels[a] for a in authors}))
    if len(classes) < 2:
        raise ValueError(f"area dataset needs at least two classes, found {list(classes)}")
    code = {c: i for i, c in enumerate(classes)}
    X = embeddings.lookup([format_token(AUTHOR, a) for a in authors])
    y = np.array([code[labels[a]] for a in authors], dtype=np.int64)
    return LabeledDataset(X, y, classes, {"total": len(labels), "kept": len(authors)})


def write_dataset(ds: LabeledDataset, fh: TextIO) -> None:
    """Debug snapshot: ``label<TAB>f1<TAB>f2...`` per row."""
    for x, label in zip(ds.X, ds.y):
        fh.write(ds.class_names[label] + "\t" + "\t".join(repr(float(v)) for v in x) + "\n")

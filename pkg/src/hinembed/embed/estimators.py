"""Estimator wrappers: ``fit(graph)`` learns node vectors, ``transform(nodes)`` looks them up."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_graph, check_scalar
from ..hetgraph import MetaPathSchema, NodeRef, TypedGraph
from ..walks import WalkConfig, metapath_walks, node2vec_walks, uniform_walks
from .matrix import EmbeddingMatrix
from .sgns import SgnsConfig, train_sgns
from .verse import VerseConfig, train_verse

__all__ = ["DeepWalk", "Node2Vec", "Metapath2Vec", "Verse"]


class _EmbedderMixin(TransformerMixin):
    def transform(self, X):
        """Vectors for ``X``: a graph (all embedded nodes) or node tokens / NodeRefs."""
        check_is_fitted(self, "embedding_")
        emb = self.embedding_
        if isinstance(X, TypedGraph):
            return emb.vectors.copy()
        tokens = [x.token if isinstance(x, NodeRef) else str(x) for x in X]
        missing = [t for t in tokens if t not in emb]
        if missing:
            raise KeyError(f"{len(missing)} nodes have no embedding, e.g. {missing[:3]}")
        return emb.lookup(tokens)

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).transform(X)


class _WalkEmbedder(_EmbedderMixin, BaseEstimator):
    def _walk_config(self) -> WalkConfig:
        check_scalar(self.walks_per_node, "walks_per_node", numbers.Integral, 1)
        check_scalar(self.walk_length, "walk_length", numbers.Integral, 2)
        return WalkConfig(self.walks_per_node, self.walk_length,
                          getattr(self, "p", 1.0), getattr(self, "q", 1.0), self.seed)

    def _sgns_config(self) -> SgnsConfig:
        return SgnsConfig(dim=self.dim, window=self.window, negatives=self.negatives,
                          epochs=self.epochs, initial_lr=self.learning_rate, seed=self.seed,
                          workers=self.workers)

    def _walks(self, graph, cfg):
        raise NotImplementedError

    def fit(self, X, y=None):
        graph = check_graph(X)
        sgns_cfg = self._sgns_config()
        corpus = self._walks(graph, self._walk_config())
        if len(corpus) == 0:
            raise ValueError("walk generation produced no walks")
        self.walks_ = corpus
        self.embedding_, self.loss_curve_ = train_sgns(corpus, sgns_cfg, return_losses=True)
        return self


class DeepWalk(_WalkEmbedder):
    """Uniform random walks followed by skip-gram training."""

    def __init__(self, dim=100, walks_per_node=10, walk_length=80, window=5, negatives=5,
                 epochs=5, learning_rate=0.025, seed=0, workers=1):
        self.dim = dim
        self.walks_per_node = walks_per_node
        self.walk_length = walk_length
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed
        self.workers = workers

    def _walks(self, graph, cfg):
        return uniform_walks(graph, cfg)


class Node2Vec(_WalkEmbedder):
    """Second-order biased walks (return ``p``, in-out ``q``) followed by skip-gram training."""

    def __init__(self, dim=100, walks_per_node=10, walk_length=80, p=1.0, q=1.0, window=5,
                 negatives=5, epochs=5, learning_rate=0.025, seed=0, workers=1):
        self.dim = dim
        self.walks_per_node = walks_per_node
        self.walk_length = walk_length
        self.p = p
        self.q = q
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed
        self.workers = workers

    def _walks(self, graph, cfg):
        return node2vec_walks(graph, cfg)


class Metapath2Vec(_WalkEmbedder):
    """Meta-path guided walks followed by skip-gram training.

    Only nodes visited by some walk get a vector; with ``A-P-A`` on a
    graph that also has venues, venues are left out.
    """

    def __init__(self, metapath="A-P-A", dim=100, walks_per_node=10, walk_length=80, window=5,
                 negatives=5, epochs=5, learning_rate=0.025, seed=0, workers=1):
        self.metapath = metapath
        self.dim = dim
        self.walks_per_node = walks_per_node
        self.walk_length = walk_length
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed
        self.workers = workers

    def _walks(self, graph, cfg):
        schema = self.metapath
        if not isinstance(schema, MetaPathSchema):
            schema = MetaPathSchema.parse(str(schema))
        return metapath_walks(graph, schema, cfg)


class Verse(_EmbedderMixin, BaseEstimator):
    """Personalized-PageRank similarity embedding on one shared table."""

    def __init__(self, dim=100, alpha=0.85, negatives=3, steps=None, learning_rate=0.0025,
                 seed=0, workers=1):
        self.dim = dim
        self.alpha = alpha
        self.negatives = negatives
        self.steps = steps
        self.learning_rate = learning_rate
        self.seed = seed
        self.workers = workers

    def fit(self, X, y=None):
        graph = check_graph(X)
        cfg = VerseConfig(dim=self.dim, alpha=self.alpha, negatives=self.negatives,
                          steps=self.steps, lr=self.learning_rate, seed=self.seed,
                          workers=self.workers)
        self.embedding_, info = train_verse(graph, cfg, return_info=True)
        self.n_steps_ = info["steps"]
        self.mean_loss_ = info["mean_loss"]
        return self

"""Embeddings for typed bibliographic networks and their downstream evaluation."""

import os

import numba

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns when the installed TBB is too old
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .corpus import BibRecord, SynthConfig, build_network, synth_generate  # noqa: E402
from .embed import DeepWalk, Metapath2Vec, Node2Vec, Verse  # noqa: E402
from .hetgraph import MetaPathSchema, NodeRef, TypedGraph  # noqa: E402
from .walks import WalkConfig, metapath_walks, node2vec_walks, uniform_walks  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "BibRecord",
    "SynthConfig",
    "build_network",
    "synth_generate",
    "DeepWalk",
    "Metapath2Vec",
    "Node2Vec",
    "Verse",
    "MetaPathSchema",
    "NodeRef",
    "TypedGraph",
    "WalkConfig",
    "metapath_walks",
    "node2vec_walks",
    "uniform_walks",
]

from .estimators import DeepWalk, Metapath2Vec, Node2Vec, Verse
from .matrix import EmbeddingMatrix, read_embeddings, write_embeddings
from .sgns import SgnsConfig, Vocab, build_vocab, count_pairs, sgns_objective, train_sgns
from .verse import (
    VerseConfig,
    ppr_distribution,
    ppr_monte_carlo,
    sample_ppr_endpoints,
    train_verse,
    verse_objective,
)

__all__ = [
    "DeepWalk",
    "Node2Vec",
    "Metapath2Vec",
    "Verse",
    "EmbeddingMatrix",
    "read_embeddings",
    "write_embeddings",
    "SgnsConfig",
    "Vocab",
    "build_vocab",
    "count_pairs",
    "sgns_objective",
    "train_sgns",
    "VerseConfig",
    "ppr_distribution",
    "ppr_monte_carlo",
    "sample_ppr_endpoints",
    "train_verse",
    "verse_objective",
]

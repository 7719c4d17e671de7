from .classifiers import GaussianNaiveBayes, LogisticRegressionGD
from .datasets import (
    LabeledDataset,
    build_area_dataset,
    build_linkpred_dataset,
    coauthor_pairs,
    sample_nonedges,
    write_dataset,
)
from .features import concat_embeddings, hadamard_features
from .protocol import (
    CLASSIFIER_KINDS,
    ClassifierSpec,
    EvalReport,
    make_classifier,
    repeated_eval,
    train_classifier,
)
from .tree import DecisionTree, RandomForest

__all__ = [
    "GaussianNaiveBayes",
    "LogisticRegressionGD",
    "DecisionTree",
    "RandomForest",
    "LabeledDataset",
    "build_area_dataset",
    "build_linkpred_dataset",
    "coauthor_pairs",
    "sample_nonedges",
    "write_dataset",
    "concat_embeddings",
    "hadamard_features",
    "CLASSIFIER_KINDS",
    "ClassifierSpec",
    "EvalReport",
    "make_classifier",
    "repeated_eval",
    "train_classifier",
]

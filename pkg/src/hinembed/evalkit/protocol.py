"""Classifier specs and the repeated random-split accuracy protocol."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .classifiers import GaussianNaiveBayes, LogisticRegressionGD, require_two_classes
from .datasets import LabeledDataset
from .tree import DecisionTree, RandomForest

__all__ = [
    "CLASSIFIER_KINDS",
    "ClassifierSpec",
    "EvalReport",
    "make_classifier",
    "train_classifier",
    "repeated_eval",
]

CLASSIFIER_KINDS = ("NB", "RF", "DT", "LR")

_DEFAULTS = {
    "LR": {"l2": 1e-4, "max_iter": 1000},
    "NB": {"var_floor": 1e-9},
    "DT": {"max_depth": 16, "min_samples_leaf": 2},
    "RF": {"n_estimators": 100, "max_features": "sqrt", "max_depth": 16, "min_samples_leaf": 2},
}
_ALIASES = {"GNB": "NB"}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        kind = _ALIASES.get(self.kind.upper(), self.kind.upper())
        if kind not in CLASSIFIER_KINDS:
            raise ValueError(f"unknown classifier {self.kind!r}; expected one of {CLASSIFIER_KINDS}")
        object.__setattr__(self, "kind", kind)
        for key, value in self.params.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool) and value <= 0:
                raise ValueError(f"{kind} parameter {key} must be positive, got {value}")

    def resolved(self) -> dict:
        return {**_DEFAULTS[self.kind], **self.params}

    def as_dict(self) -> dict:
        return {"kind": self.kind, "params": self.resolved()}


def make_classifier(spec: ClassifierSpec, seed: int = 0):
    params = spec.resolved()
    if spec.kind == "LR":
        return LogisticRegressionGD(**params)
    if spec.kind == "NB":
        return GaussianNaiveBayes(**params)
    if spec.kind == "DT":
        return DecisionTree(random_state=seed, **params)
    return RandomForest(random_state=seed, **params)


def train_classifier(spec: ClassifierSpec, train: LabeledDataset, seed: int = 0):
    require_two_classes(train.y)
    return make_classifier(spec, seed).fit(train.X, train.y)


@dataclass
class EvalReport:
    mean_accuracy: float
    std_accuracy: float
    repeats: int
    accuracies: list[float]
    n_samples: int
    train_fraction: float

    def as_dict(self) -> dict:
        return asdict(self)


def repeated_eval(
    dataset: LabeledDataset,
    spec: ClassifierSpec,
    train_fraction: float = 0.8,
    repeats: int = 10,
    seed: int = 0,
    max_retries: int = 10,
) -> EvalReport:
    """Mean and standard deviation of held-out accuracy over ``repeats`` random splits.

    Every repeat reshuffles the full dataset. A split whose training part
    holds one class is redrawn with the next sub-seed, at most
    ``max_retries`` times.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    n = len(dataset)
    n_train = int(round(train_fraction * n))
    if n_train < 2 or n_train >= n:
        raise ValueError(f"dataset of {n} rows is too small for a {train_fraction} split")
    require_two_classes(dataset.y)
    accs = []
    for r in range(repeats):
        for attempt in range(max_retries + 1):
            sub = np.random.SeedSequence([seed, r, attempt])
            rng = np.random.default_rng(sub)
            perm = rng.permutation(n)
            tr, te = perm[:n_train], perm[n_train:]
            if np.unique(dataset.y[tr]).size >= 2:
                break
        else:
            raise ValueError(f"repeat {r}: every split left a single-class training set")
        model_seed = int(sub.generate_state(1)[0])
        model = make_classifier(spec, model_seed).fit(dataset.X[tr], dataset.y[tr])
        accs.append(float(np.mean(model.predict(dataset.X[te]) == dataset.y[te])))
    arr = np.asarray(accs)
    return EvalReport(float(arr.mean()), float(arr.std()), repeats, accs, n, train_fraction)

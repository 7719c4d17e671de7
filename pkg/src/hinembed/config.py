"""Declarative experiment configuration (TOML) with ``key=value`` overrides.

Example::

    seed = 7
    output_dir = "runs/demo"
    networks = ["AA", "APA", "AVA", "ALL"]
    methods = ["metapath2vec", "node2vec", "verse", "combine"]

    [synth]
    num_authors = 500
    num_areas = 5

    [metapaths]
    ALL = "A-V-A"

    [walk]
    walk_length = 40

    [classifier.LR]
    l2 = 1e-3
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli

from .corpus import NETWORK_VARIANTS, SynthConfig
from .evalkit.protocol import CLASSIFIER_KINDS, ClassifierSpec
from .hetgraph import MetaPathSchema

__all__ = ["ConfigError", "PipelineConfig", "load_config", "apply_overrides", "BASE_METHODS",
           "METHODS", "TASKS", "DEFAULT_METAPATHS"]

BASE_METHODS = ("metapath2vec", "node2vec", "verse")
METHODS = BASE_METHODS + ("combine",)
TASKS = ("linkpred", "areaclass")
DEFAULT_METAPATHS = {"AA": "A-A", "APA": "A-P-A", "AVA": "A-V-A", "ALL": "A-P-A"}
_NETWORK_TYPES = {"AA": {"A"}, "APA": {"A", "P"}, "AVA": {"A", "V"}, "ALL": {"A", "P", "V"}}


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    output_dir: str = "runs/default"
    seed: int = 0
    records: str | None = None
    synth: dict | None = None
    cutoff_year: int = 2008
    networks: list[str] = field(default_factory=lambda: list(NETWORK_VARIANTS))
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    tasks: list[str] = field(default_factory=lambda: list(TASKS))
    classifiers: list[str] = field(default_factory=lambda: list(CLASSIFIER_KINDS))
    metapaths: dict = field(default_factory=lambda: dict(DEFAULT_METAPATHS))
    walk: dict = field(default_factory=lambda: {
        "walks_per_node": 10, "walk_length": 80, "p": 1.0, "q": 1.0})
    sgns: dict = field(default_factory=lambda: {
        "dim": 100, "window": 5, "negatives": 5, "epochs": 5, "initial_lr": 0.025})
    verse: dict = field(default_factory=lambda: {
        "dim": 100, "alpha": 0.85, "negatives": 3, "steps_per_node": 1000, "lr": 0.0025})
    classifier: dict = field(default_factory=dict)
    train_fraction: float = 0.8
    repeats: int = 10
    negative_ratio: float = 1.0
    deterministic: bool = True
    threads: int = 1

    def validate(self) -> "PipelineConfig":
        if (self.records is None) == (self.synth is None):
            raise ConfigError("exactly one of 'records' or [synth] must be given")
        if self.synth is not None:
            try:
                self.synth_config().validate()
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"[synth]: {exc}") from None
        self.networks = [n.upper() for n in self.networks]
        self.classifiers = [ClassifierSpec(c).kind for c in self.classifiers]
        for name, allowed, values in (
            ("networks", NETWORK_VARIANTS, self.networks),
            ("methods", METHODS, self.methods),
            ("tasks", TASKS, self.tasks),
            ("classifiers", CLASSIFIER_KINDS, self.classifiers),
        ):
            if not values:
                raise ConfigError(f"'{name}' must not be empty")
            bad = [v for v in values if v not in allowed]
            if bad:
                raise ConfigError(f"unknown {name} {bad}; allowed {list(allowed)}")
            if len(set(values)) != len(values):
                raise ConfigError(f"duplicate entries in '{name}'")
        if "combine" in self.methods:
            missing = [m for m in BASE_METHODS if m not in self.methods]
            if missing:
                raise ConfigError(f"'combine' requires methods {missing} to be enabled")
        if "metapath2vec" in self.methods:
            for net in self.networks:
                schema = self.metapath_for(net)
                if not schema.symmetric:
                    raise ConfigError(f"meta-path {schema} for {net} is not symmetric")
                extra = set(schema.types) - _NETWORK_TYPES[net]
                if extra:
                    raise ConfigError(f"meta-path {schema} uses types {sorted(extra)} absent from {net}")
                if net == "AA" and str(schema) != "A-A":
                    raise ConfigError("metapath2vec on AA must use the schema A-A")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.repeats < 1 or self.threads < 1:
            raise ConfigError("repeats and threads must be >= 1")
        if self.negative_ratio <= 0:
            raise ConfigError("negative_ratio must be positive")
        for kind, params in self.classifier.items():
            try:
                ClassifierSpec(kind, dict(params))
            except ValueError as exc:
                raise ConfigError(f"[classifier.{kind}]: {exc}") from None
        return self

    def metapath_for(self, network: str) -> MetaPathSchema:
        return MetaPathSchema.parse(self.metapaths.get(network, DEFAULT_METAPATHS[network]))

    def synth_config(self) -> SynthConfig:
        params = dict(self.synth or {})
        params.setdefault("seed", self.seed)
        params.setdefault("cutoff_year", self.cutoff_year)
        return SynthConfig(**params)

    def classifier_spec(self, kind: str) -> ClassifierSpec:
        return ClassifierSpec(kind, dict(self.classifier.get(kind, {})))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


_FIELDS = {f.name for f in dataclasses.fields(PipelineConfig)}


def _from_mapping(data: dict) -> PipelineConfig:
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    base = PipelineConfig()
    merged = {}
    for key, value in data.items():
        default = getattr(base, key)
        # tables merge over defaults so a partial [walk] keeps the other keys
        if isinstance(default, dict) and isinstance(value, dict) and key not in ("classifier",):
            merged[key] = {**default, **value}
        else:
            merged[key] = value
    return PipelineConfig(**merged)


def _parse_value(text: str) -> Any:
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values use TOML syntax, bare words are strings."""
    data = json.loads(json.dumps(data))
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part} is not a table")
        node[parts[-1]] = _parse_value(raw.strip())
    return data


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> PipelineConfig:
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomli.load(fh)
        except (OSError, tomli.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if data.get("records") and not Path(data["records"]).is_absolute():
            data["records"] = str(Path(path).parent / data["records"])
    data = apply_overrides(data, overrides or [])
    try:
        cfg = _from_mapping(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()

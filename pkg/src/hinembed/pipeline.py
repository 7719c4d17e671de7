"""End-to-end experiment runner with content-addressed stage caching.

Every stage writes plain files under the output directory next to a
``.key`` sidecar holding the hash of the stage's inputs and parameters.
A stage whose key is unchanged and whose artifacts are intact is skipped.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import shlex
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numba

from .config import BASE_METHODS, METHODS, TASKS, PipelineConfig
from .corpus import (
    NETWORK_VARIANTS,
    build_network,
    derive_author_labels,
    parse_records,
    read_labels,
    synth_generate,
    temporal_split,
    write_labels,
    write_records,
)
from .embed.matrix import EmbeddingMatrix, read_embeddings, write_embeddings
from .embed.sgns import SgnsConfig, train_sgns
from .embed.verse import VerseConfig, train_verse
from .evalkit.datasets import build_area_dataset, build_linkpred_dataset
from .evalkit.features import concat_embeddings
from .evalkit.protocol import CLASSIFIER_KINDS, repeated_eval
from .hetgraph import read_edgelist, summarize, write_edgelist
from .walks import WalkConfig, metapath_walks, node2vec_walks, read_walks, write_walks

__all__ = [
    "StageError",
    "RunManifest",
    "REPORT_COLUMNS",
    "run_pipeline",
    "verify_manifest",
    "read_report",
    "report_table",
    "derive_seed",
    "evaluate_embedding",
    "combine_embeddings",
]

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["task", "network", "method", "classifier", "mean_accuracy", "std_accuracy",
                  "repeats", "n_samples", "coverage"]
_NET_LABEL = {"AA": "AA", "APA": "APA", "AVA": "AVA", "ALL": "All"}
_METHOD_LABEL = {"metapath2vec": "Metapath2vec", "node2vec": "Node2vec", "verse": "VERSE",
                 "combine": "Combine"}
_TASK_TITLE = {"linkpred": "Co-authorship prediction accuracy",
               "areaclass": "Research-area classification accuracy"}


class StageError(RuntimeError):
    def __init__(self, stage: str, replay: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}\n  replay: {replay}")
        self.stage = stage
        self.replay = replay
        self.cause = cause


def derive_seed(seed: int, *parts) -> int:
    """Stable 63-bit sub-seed for a named stage."""
    h = hashlib.sha256(json.dumps([seed, *parts]).encode()).digest()
    return int.from_bytes(h[:8], "little") >> 1


def file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _key(payload) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


@dataclass
class RunManifest:
    config: dict
    stages: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)  # relative path -> sha256
    timings: dict = field(default_factory=dict)
    output_dir: str = ""
    summaries: dict = field(default_factory=dict)

    @property
    def cache_hits(self) -> list[str]:
        return [name for name, s in self.stages.items() if s["cached"]]

    def to_json(self) -> str:
        body = {"config": self.config, "stages": self.stages, "artifacts": self.artifacts,
                "timings": self.timings, "summaries": self.summaries}
        return json.dumps(body, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        path = Path(path)
        data = json.loads(path.read_text())
        return cls(data["config"], data["stages"], data["artifacts"], data["timings"],
                   str(path.parent), data.get("summaries", {}))


def verify_manifest(manifest: RunManifest) -> list[str]:
    """Relative paths of artifacts that are missing or whose hash changed."""
    root = Path(manifest.output_dir)
    bad = []
    for rel, digest in manifest.artifacts.items():
        p = root / rel
        if not p.exists() or file_hash(p) != digest:
            bad.append(rel)
    return bad


class _Runner:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.root = Path(cfg.output_dir)
        self.manifest = RunManifest(cfg.to_dict(), output_dir=str(self.root))

    def stage(self, name: str, inputs: list[Path], params: dict, outputs: list[Path],
              build: Callable[[], None], replay: str) -> None:
        key = _key({"stage": name.split(":")[0], "params": params,
                    "inputs": [file_hash(p) for p in inputs]})
        sidecar = outputs[0].with_name(outputs[0].name + ".key")
        cached = False
        if sidecar.exists() and all(p.exists() for p in outputs):
            stored = json.loads(sidecar.read_text())
            cached = stored.get("key") == key and all(
                file_hash(p) == stored["outputs"].get(p.name) for p in outputs)
        t0 = time.perf_counter()
        if not cached:
            for p in outputs:
                p.parent.mkdir(parents=True, exist_ok=True)
            try:
                build()
            except Exception as exc:
                raise StageError(name, replay, exc) from exc
            sidecar.write_text(json.dumps(
                {"key": key, "outputs": {p.name: file_hash(p) for p in outputs}}, sort_keys=True))
        elapsed = time.perf_counter() - t0
        logger.info("%s %s (%.2fs)", "cached" if cached else "built", name, elapsed)
        rels = [str(p.relative_to(self.root)) for p in outputs]
        self.manifest.stages[name] = {"key": key, "cached": cached, "outputs": rels}
        self.manifest.timings[name] = round(elapsed, 4)
        for p, rel in zip(outputs, rels):
            self.manifest.artifacts[rel] = file_hash(p)

    # helpers -------------------------------------------------------------

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def workers(self) -> int:
        return 1 if self.cfg.deterministic else self.cfg.threads

    def sgns_config(self, seed: int) -> SgnsConfig:
        return SgnsConfig(seed=seed, workers=self.workers(), **self.cfg.sgns)

    def verse_config(self, graph_nodes: int, seed: int) -> VerseConfig:
        params = dict(self.cfg.verse)
        per_node = params.pop("steps_per_node", None)
        if params.get("steps") is None and per_node is not None:
            params["steps"] = int(per_node) * graph_nodes
        return VerseConfig(seed=seed, workers=self.workers(), **params)


def _write_text(path: Path, writer: Callable[[io.TextIOBase], None]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer(fh)


def _read_records(path: Path):
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh).records


def _read_graph(path: Path):
    with open(path, encoding="utf-8") as fh:
        return read_edgelist(fh)


def _read_emb(path: Path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        return read_embeddings(fh)


def _param_flags(params: dict, prefix: str = "") -> str:
    return "".join(f" -P {shlex.quote(f'{prefix}{k}={json.dumps(v)}')}"
                   for k, v in sorted(params.items()) if v is not None)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def combine_embeddings(mats: list[EmbeddingMatrix]) -> EmbeddingMatrix:
    """Concatenate per-node vectors over the nodes every matrix covers."""
    # walkers that skip node types (e.g. A-P-A on ALL) cover fewer nodes
    common = set(mats[0].nodes).intersection(*(m.nodes for m in mats[1:]))
    if not common:
        raise ValueError("the embeddings share no nodes")
    keep = [t for t in mats[0].nodes if t in common]
    return concat_embeddings([EmbeddingMatrix(keep, m.lookup(keep)) for m in mats])


def evaluate_embedding(task: str, emb: EmbeddingMatrix, specs, eval_records=None, labels=None,
                       train_fraction: float = 0.8, repeats: int = 10,
                       negative_ratio: float = 1.0, seed: int = 0) -> list[list]:
    """Score one embedding on ``task`` with every classifier spec.

    Returns rows ``[classifier, mean, std, repeats, n_samples, coverage]``.
    ``eval_records`` (linkpred) and ``labels`` (areaclass) are file paths.
    """
    if task == "linkpred":
        if eval_records is None:
            raise ValueError("linkpred needs the held-out records")
        ds = build_linkpred_dataset(_read_records(Path(eval_records)), emb, negative_ratio, seed)
    elif task == "areaclass":
        if labels is None:
            raise ValueError("areaclass needs an author label file")
        with open(labels, encoding="utf-8") as fh:
            ds = build_area_dataset(read_labels(fh), emb)
    else:
        raise ValueError(f"unknown task {task!r}; expected one of {list(TASKS)}")
    rows = []
    for spec in specs:
        rep = repeated_eval(ds, spec, train_fraction, repeats, derive_seed(seed, spec.kind))
        rows.append([spec.kind, _fmt(rep.mean_accuracy), _fmt(rep.std_accuracy), rep.repeats,
                     rep.n_samples, _fmt(ds.coverage_fraction)])
    return rows


def run_pipeline(cfg: PipelineConfig) -> RunManifest:
    """Run every stage of ``cfg`` in dependency order and write the report."""
    cfg.validate()
    numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
    r = _Runner(cfg)
    r.root.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed
    q = shlex.quote

    # 1. records
    records_path = r.path("records.tsv")
    if cfg.synth is not None:
        synth = cfg.synth_config()

        def build_records():
            _write_text(records_path, lambda fh: write_records(synth_generate(synth), fh))

        r.stage("records", [], {"synth": synth.__dict__}, [records_path], build_records,
                f"hinembed --seed {synth.seed} synth --out {q(str(records_path))}"
                + _param_flags({k: v for k, v in synth.__dict__.items() if k != "seed"}))
    else:
        src = Path(cfg.records)

        def build_records():
            with open(src, encoding="utf-8") as fh:
                parsed = parse_records(fh)
            if not parsed.records:
                raise ValueError(f"no valid records in {src}")
            _write_text(records_path, lambda out: write_records(parsed.records, out))

        r.stage("records", [src], {"source": str(src)}, [records_path], build_records,
                f"hinembed ingest {q(str(src))} --cutoff {cfg.cutoff_year} --out-dir {q(str(r.root))}")

    # 2. temporal split and labels
    train_path, eval_path, labels_path = (r.path("train.tsv"), r.path("eval.tsv"),
                                          r.path("labels.tsv"))

    def build_split():
        train, held = temporal_split(_read_records(records_path), cfg.cutoff_year)
        if not train or not held:
            raise ValueError(f"cutoff {cfg.cutoff_year} leaves an empty side "
                             f"({len(train)} train / {len(held)} eval records)")
        _write_text(train_path, lambda fh: write_records(train, fh))
        _write_text(eval_path, lambda fh: write_records(held, fh))
        _write_text(labels_path, lambda fh: write_labels(derive_author_labels(held), fh))

    r.stage("split", [records_path], {"cutoff": cfg.cutoff_year},
            [train_path, eval_path, labels_path], build_split,
            f"hinembed ingest {q(str(records_path))} --cutoff {cfg.cutoff_year} "
            f"--out-dir {q(str(r.root))}")

    # 3. networks
    net_paths = {}
    summaries = {}
    for net in cfg.networks:
        path = r.path("networks", f"{net}.edges")
        net_paths[net] = path

        def build_net(net=net, path=path):
            g = build_network(_read_records(train_path), net)
            _write_text(path, lambda fh: write_edgelist(g, fh))

        r.stage(f"network:{net}", [train_path], {"variant": net}, [path], build_net,
                f"hinembed build-net {q(str(train_path))} --variant {net} --out {q(str(path))}")
        summaries[net] = summarize(_read_graph(path))
    r.manifest.summaries = summaries

    # 4. base embeddings
    emb_paths: dict[tuple[str, str], Path] = {}
    for net in cfg.networks:
        edges = net_paths[net]
        for method in (m for m in BASE_METHODS if m in cfg.methods):
            out = r.path("embeddings", f"{net}.{method}.emb")
            emb_paths[net, method] = out
            walk_seed = derive_seed(seed, "walk", net, method)
            emb_seed = derive_seed(seed, "embed", net, method)
            if method == "verse":
                def build_verse(edges=edges, out=out, emb_seed=emb_seed):
                    g = _read_graph(edges)
                    emb = train_verse(g, r.verse_config(g.num_nodes, emb_seed))
                    _write_text(out, lambda fh: write_embeddings(emb, fh))

                r.stage(f"embed:{net}:{method}", [edges],
                        {"verse": cfg.verse, "seed": emb_seed, "workers": r.workers()},
                        [out], build_verse,
                        f"hinembed --seed {emb_seed} embed --method verse --edges {q(str(edges))} "
                        f"--out {q(str(out))}" + _param_flags(cfg.verse))
                continue
            walks_path = r.path("walks", f"{net}.{method}.walks")
            schema = cfg.metapath_for(net) if method == "metapath2vec" else None
            wcfg = WalkConfig(seed=walk_seed, **cfg.walk)

            def build_walks(edges=edges, walks_path=walks_path, schema=schema, wcfg=wcfg):
                g = _read_graph(edges)
                corpus = metapath_walks(g, schema, wcfg) if schema else node2vec_walks(g, wcfg)
                _write_text(walks_path, lambda fh: write_walks(corpus, fh, g))

            kind = f"metapath --metapath {','.join(schema.types)}" if schema else "node2vec"
            r.stage(f"walk:{net}:{method}", [edges],
                    {"walk": cfg.walk, "schema": str(schema), "seed": walk_seed},
                    [walks_path], build_walks,
                    f"hinembed --seed {walk_seed} walk {q(str(edges))} --method {kind} "
                    f"--walks-per-node {wcfg.walks_per_node} --walk-length {wcfg.walk_length} "
                    f"--p {wcfg.p} --q {wcfg.q} --out {q(str(walks_path))}")

            def build_sgns(edges=edges, walks_path=walks_path, out=out, emb_seed=emb_seed):
                g = _read_graph(edges)
                with open(walks_path, encoding="utf-8") as fh:
                    corpus = read_walks(fh, g)
                emb = train_sgns(corpus, r.sgns_config(emb_seed))
                _write_text(out, lambda fh: write_embeddings(emb, fh))

            r.stage(f"embed:{net}:{method}", [edges, walks_path],
                    {"sgns": cfg.sgns, "seed": emb_seed, "workers": r.workers()},
                    [out], build_sgns,
                    f"hinembed --seed {emb_seed} embed --method sgns --edges {q(str(edges))} "
                    f"--walks {q(str(walks_path))} --out {q(str(out))}" + _param_flags(cfg.sgns))

        if "combine" in cfg.methods:
            out = r.path("embeddings", f"{net}.combine.emb")
            parts = [emb_paths[net, m] for m in BASE_METHODS]
            emb_paths[net, "combine"] = out

            def build_combine(parts=parts, out=out):
                emb = combine_embeddings([_read_emb(p) for p in parts])
                _write_text(out, lambda fh: write_embeddings(emb, fh))

            r.stage(f"embed:{net}:combine", parts, {}, [out], build_combine,
                    "hinembed embed --method combine --inputs "
                    + q(",".join(str(p) for p in parts)) + f" --out {q(str(out))}")

    # 5. evaluation
    result_paths = []
    specs = [cfg.classifier_spec(k) for k in CLASSIFIER_KINDS if k in cfg.classifiers]
    for task in (t for t in TASKS if t in cfg.tasks):
        for net in cfg.networks:
            for method in (m for m in METHODS if m in cfg.methods):
                emb_path = emb_paths[net, method]
                out = r.path("results", f"{task}.{net}.{method}.csv")
                result_paths.append(out)
                # shared across cells so methods see identical negatives and splits
                eval_seed = derive_seed(seed, "eval", task)
                inputs = [emb_path, eval_path if task == "linkpred" else labels_path]

                def build_eval(task=task, emb_path=emb_path, out=out, eval_seed=eval_seed):
                    rows = evaluate_embedding(
                        task, _read_emb(emb_path), specs, eval_records=eval_path,
                        labels=labels_path, train_fraction=cfg.train_fraction,
                        repeats=cfg.repeats, negative_ratio=cfg.negative_ratio, seed=eval_seed)
                    _write_text(out, lambda fh: csv.writer(fh, lineterminator="\n").writerows(
                        [[task, net, method] + row for row in rows]))

                r.stage(f"eval:{task}:{net}:{method}", inputs,
                        {"classifiers": [s.as_dict() for s in specs], "seed": eval_seed,
                         "train_fraction": cfg.train_fraction, "repeats": cfg.repeats,
                         "negative_ratio": cfg.negative_ratio},
                        [out], build_eval,
                        f"hinembed --seed {eval_seed} eval --task {task} --network {net} "
                        f"--method {method} --embeddings {q(str(emb_path))} "
                        f"--eval-records {q(str(eval_path))} --labels {q(str(labels_path))} "
                        f"--classifiers {','.join(s.kind for s in specs)} "
                        f"--train-fraction {cfg.train_fraction} --repeats {cfg.repeats} "
                        f"--negative-ratio {cfg.negative_ratio} --out {q(str(out))}"
                        + "".join(_param_flags(s.params, prefix=f"{s.kind}.") for s in specs))

    # 6. report
    report_csv, report_txt = r.path("report.csv"), r.path("report.txt")

    def build_report():
        rows = []
        for p in result_paths:
            with open(p, encoding="utf-8") as fh:
                rows.extend(csv.reader(fh))
        _write_text(report_csv, lambda fh: _write_report_csv(rows, fh))
        report_txt.write_text(report_table(read_report(report_csv)), encoding="utf-8")

    r.stage("report", result_paths, {}, [report_csv, report_txt], build_report,
            f"hinembed report {q(str(report_csv))}")

    manifest_path = r.path("manifest.json")
    manifest_path.write_text(r.manifest.to_json(), encoding="utf-8")
    return r.manifest


def _write_report_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    w.writerows(rows)


def read_report(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def report_table(rows: list[dict]) -> str:
    """Aligned text tables, one per task: classifiers down, methods x networks across.

    The best LR cell within each method group is marked with ``*``.
    Missing cells are blank and listed under the table.
    """
    cells = {(r["task"], r["network"], r["method"], r["classifier"]): float(r["mean_accuracy"])
             for r in rows}
    nets = list(NETWORK_VARIANTS)
    width = 7
    group_w = len(nets) * (width + 1)
    out = []
    for task in TASKS:
        if not any(k[0] == task for k in cells):
            continue
        best = {}
        for m in METHODS:
            lr = [(cells[task, n, m, "LR"], n) for n in nets if (task, n, m, "LR") in cells]
            if lr:
                best[m] = max(lr, key=lambda v: v[0])[1]
        head1 = f"{'':<10}" + "".join(f"|{_METHOD_LABEL[m]:^{group_w}}" for m in METHODS) + "|"
        head2 = f"{'Classifier':<10}" + "".join(
            "|" + "".join(f"{_NET_LABEL[n]:>{width}} " for n in nets) for _ in METHODS) + "|"
        body, missing = [], []
        for clf in CLASSIFIER_KINDS:
            line = f"{clf:<10}"
            for m in METHODS:
                line += "|"
                for n in nets:
                    v = cells.get((task, n, m, clf))
                    if v is None:
                        missing.append(f"{_METHOD_LABEL[m]}/{_NET_LABEL[n]}/{clf}")
                        text = ""
                    else:
                        text = f"{v:.3f}" + ("*" if clf == "LR" and best.get(m) == n else " ")
                    line += f"{text:>{width}} "
            body.append(line + "|")
        rule = "-" * len(head2)
        out += [_TASK_TITLE[task], rule, head1, head2, rule, *body, rule,
                "* best LR accuracy within the method group"]
        if missing:
            out.append(f"missing cells ({len(missing)}): " + ", ".join(missing))
        out.append("")
    return "\n".join(out)

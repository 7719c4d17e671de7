"""Command line entry point: ``hinembed <subcommand> ...``.

Relative output paths are placed under ``$HINEMBED_OUTPUT`` when it is set.
Exit status is 0 on success, 1 for invalid input or configuration and 2
when a pipeline stage fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numba

from .config import ConfigError, _parse_value, load_config
from .corpus import (
    AUTHOR,
    NETWORK_VARIANTS,
    SynthConfig,
    build_network,
    derive_author_labels,
    parse_records,
    synth_generate,
    temporal_split,
    write_labels,
    write_records,
)
from .embed.matrix import read_embeddings, write_embeddings
from .embed.sgns import SgnsConfig, train_sgns
from .embed.verse import VerseConfig, train_verse
from .evalkit.datasets import coauthor_pairs
from .evalkit.protocol import ClassifierSpec
from .hetgraph import MetaPathSchema, read_edgelist, summarize, write_edgelist
from .pipeline import (
    StageError,
    combine_embeddings,
    evaluate_embedding,
    read_report,
    report_table,
    run_pipeline,
)
from .walks import (
    WalkConfig,
    metapath_walks,
    node2vec_walks,
    read_walks,
    uniform_walks,
    write_walks,
)

OUTPUT_ENV = "HINEMBED_OUTPUT"
logger = logging.getLogger("hinembed")


def _out(path: str) -> Path:
    p = Path(path)
    root = os.environ.get(OUTPUT_ENV)
    if root and not p.is_absolute():
        p = Path(root) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _open_out(path: str):
    return open(_out(path), "w", encoding="utf-8", newline="\n")


def _params(items: list[str] | None) -> dict:
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"parameter {item!r} is not key=value")
        out[key.strip()] = _parse_value(raw.strip())
    return out


def _workers(args) -> int:
    return 1 if args.deterministic else args.threads


def _read_graph(path: str):
    with open(path, encoding="utf-8") as fh:
        return read_edgelist(fh)


def _read_records(path: str, strict: bool = False):
    with open(path, encoding="utf-8") as fh:
        parsed = parse_records(fh)
    for lineno, msg in parsed.errors[:20]:
        print(f"{path}:{lineno}: {msg}", file=sys.stderr)
    if len(parsed.errors) > 20:
        print(f"... {len(parsed.errors) - 20} more malformed lines", file=sys.stderr)
    if strict and parsed.errors:
        raise ValueError(f"{len(parsed.errors)} malformed lines in {path}")
    if not parsed.records:
        raise ValueError(f"no valid records in {path}")
    return parsed.records


# subcommands ----------------------------------------------------------------


def cmd_synth(args) -> None:
    params = _params(args.param)
    params.setdefault("seed", args.seed)
    cfg = SynthConfig(**params)
    cfg.validate()
    records = synth_generate(cfg)
    with _open_out(args.out) as fh:
        write_records(records, fh)
    logger.info("wrote %d records to %s", len(records), args.out)


def cmd_ingest(args) -> None:
    records = _read_records(args.records, args.strict)
    train, held = temporal_split(records, args.cutoff)
    if not train or not held:
        raise ValueError(f"cutoff {args.cutoff} leaves an empty side "
                         f"({len(train)} train / {len(held)} eval records)")
    root = Path(args.out_dir)
    for name, recs in (("records.tsv", records), ("train.tsv", train), ("eval.tsv", held)):
        with _open_out(str(root / name)) as fh:
            write_records(recs, fh)
    with _open_out(str(root / "labels.tsv")) as fh:
        write_labels(derive_author_labels(held), fh)
    if args.summary:
        stats = {"train_records": len(train), "eval_records": len(held)}
        for net in NETWORK_VARIANTS:
            s = summarize(build_network(train, net))
            stats[f"{net}_edges"] = s["edges"]
            stats[f"{net}_nodes"] = s["nodes"]
        pairs = coauthor_pairs(held)
        stats["eval_authors"] = len({a for p in pairs for a in p})
        stats["eval_relations"] = len(pairs)
        stats["authors"] = stats["ALL_nodes"].get(AUTHOR, 0)
        print(json.dumps(stats, indent=2, sort_keys=True))


def cmd_build_net(args) -> None:
    g = build_network(_read_records(args.records), args.variant)
    with _open_out(args.out) as fh:
        write_edgelist(g, fh)
    print(json.dumps(summarize(g), sort_keys=True))


def cmd_walk(args) -> None:
    g = _read_graph(args.edges)
    cfg = WalkConfig(walks_per_node=args.walks_per_node, walk_length=args.walk_length,
                     p=args.p, q=args.q, seed=args.seed)
    numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    if args.method == "metapath":
        if not args.metapath:
            raise ValueError("--method metapath needs --metapath, e.g. A,P,A")
        corpus = metapath_walks(g, MetaPathSchema.parse(args.metapath), cfg)
    elif args.method == "node2vec":
        corpus = node2vec_walks(g, cfg)
    else:
        corpus = uniform_walks(g, cfg)
    with _open_out(args.out) as fh:
        write_walks(corpus, fh, g)
    logger.info("wrote %d walks (%d tokens)", len(corpus), corpus.num_tokens)


def cmd_embed(args) -> None:
    params = _params(args.param)
    numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    if args.method == "combine":
        if not args.inputs:
            raise ValueError("--method combine needs --inputs a.emb,b.emb,...")
        mats = []
        for path in args.inputs.split(","):
            with open(path, encoding="utf-8") as fh:
                mats.append(read_embeddings(fh))
        emb = combine_embeddings(mats)
    else:
        if not args.edges:
            raise ValueError(f"--method {args.method} needs --edges")
        g = _read_graph(args.edges)
        if args.method == "sgns":
            if not args.walks:
                raise ValueError("--method sgns needs --walks")
            with open(args.walks, encoding="utf-8") as fh:
                corpus = read_walks(fh, g)
            emb = train_sgns(corpus, SgnsConfig(seed=args.seed, workers=_workers(args), **params))
        else:
            per_node = params.pop("steps_per_node", None)
            if params.get("steps") is None and per_node is not None:
                params["steps"] = int(per_node) * g.num_nodes
            emb = train_verse(g, VerseConfig(seed=args.seed, workers=_workers(args), **params))
    with _open_out(args.out) as fh:
        write_embeddings(emb, fh)
    logger.info("wrote %d x %d embeddings", len(emb), emb.dim)


def cmd_eval(args) -> None:
    with open(args.embeddings, encoding="utf-8") as fh:
        emb = read_embeddings(fh)
    params: dict[str, dict] = {}
    for key, value in _params(args.param).items():
        kind, _, name = key.partition(".")
        params.setdefault(ClassifierSpec(kind).kind, {})[name] = value
    specs = []
    for kind in args.classifiers.split(","):
        spec = ClassifierSpec(kind)
        specs.append(ClassifierSpec(spec.kind, params.get(spec.kind, {})))
    rows = evaluate_embedding(args.task, emb, specs, eval_records=args.eval_records,
                              labels=args.labels, train_fraction=args.train_fraction,
                              repeats=args.repeats, negative_ratio=args.negative_ratio,
                              seed=args.seed)
    rows = [[args.task, args.network, args.method] + row for row in rows]
    if args.out:
        with _open_out(args.out) as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)


def cmd_report(args) -> None:
    text = report_table(read_report(args.report))
    if args.out:
        with _open_out(args.out) as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> None:
    overrides = list(args.set or [])
    if args.seed_given:
        overrides.append(f"seed={args.seed}")
    if args.threads_given:
        overrides.append(f"threads={args.threads}")
    if args.deterministic is not None:
        overrides.append(f"deterministic={str(args.deterministic).lower()}")
    cfg = load_config(args.config, overrides)
    root = os.environ.get(OUTPUT_ENV)
    if root and not Path(cfg.output_dir).is_absolute():
        cfg.output_dir = str(Path(root) / cfg.output_dir)
    manifest = run_pipeline(cfg)
    hits = len(manifest.cache_hits)
    print(f"{len(manifest.stages)} stages ({hits} cached); report at "
          f"{Path(cfg.output_dir) / 'report.csv'}")
    if not args.quiet:
        print((Path(cfg.output_dir) / "report.txt").read_text(encoding="utf-8"))


# parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hinembed", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default 1)")
    ap.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None,
                    help="single-worker training so results are bit-reproducible")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    param_help = "extra key=value parameter (repeatable)"

    p = sub.add_parser("synth", help="generate a synthetic planted-area corpus")
    p.add_argument("--out", required=True)
    p.add_argument("-P", "--param", action="append", help=param_help)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate records and split them at the cutoff year")
    p.add_argument("records")
    p.add_argument("--cutoff", type=int, default=2008)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--strict", action="store_true", help="fail on any malformed line")
    p.add_argument("--summary", action="store_true",
                   help="print node and edge counts of the four networks")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-net", help="build the AA, APA, AVA or ALL network")
    p.add_argument("records")
    p.add_argument("--variant", required=True, type=str.upper, choices=NETWORK_VARIANTS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_net)

    p = sub.add_parser("walk", help="generate a random-walk corpus")
    p.add_argument("edges")
    p.add_argument("--method", choices=("uniform", "node2vec", "metapath"), default="node2vec")
    p.add_argument("--metapath", help="schema such as A,P,A")
    p.add_argument("--walks-per-node", type=int, default=10)
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("embed", help="train skip-gram or VERSE embeddings, or concatenate")
    p.add_argument("--method", choices=("sgns", "verse", "combine"), required=True)
    p.add_argument("--edges")
    p.add_argument("--walks")
    p.add_argument("--inputs", help="comma-separated embedding files (combine)")
    p.add_argument("--out", required=True)
    p.add_argument("-P", "--param", action="append", help=param_help)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="score an embedding with the repeated-split protocol")
    p.add_argument("--task", choices=("linkpred", "areaclass"), required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--eval-records")
    p.add_argument("--labels")
    p.add_argument("--classifiers", default="NB,RF,DT,LR")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--negative-ratio", type=float, default=1.0)
    p.add_argument("--network", default="-", help="label written to the result rows")
    p.add_argument("--method", default="-", help="label written to the result rows")
    p.add_argument("--out")
    p.add_argument("-P", "--param", action="append", help="classifier parameter KIND.key=value")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render report.csv as aligned tables")
    p.add_argument("report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="run the full pipeline from a TOML config")
    p.add_argument("config", nargs="?")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the tables")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args.seed_given = args.seed is not None
    args.threads_given = args.threads is not None
    args.seed = 0 if args.seed is None else args.seed
    args.threads = 1 if args.threads is None else args.threads
    try:
        if args.threads < 1:
            raise ValueError("--threads must be >= 1")
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

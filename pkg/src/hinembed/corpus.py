"""Bibliographic records, temporal splits, network builders and a synthetic generator."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence, TextIO

import numpy as np

from .hetgraph import TypedGraph

__all__ = [
    "BibRecord",
    "RecordError",
    "ParseResult",
    "SynthConfig",
    "NETWORK_VARIANTS",
    "AUTHOR",
    "PAPER",
    "VENUE",
    "parse_records",
    "format_record",
    "write_records",
    "temporal_split",
    "build_network",
    "derive_author_labels",
    "write_labels",
    "read_labels",
    "synth_generate",
]

logger = logging.getLogger(__name__)

AUTHOR, PAPER, VENUE = "A", "P", "V"
NETWORK_VARIANTS = ("AA", "APA", "AVA", "ALL")


class RecordError(ValueError):
    pass


@dataclass(frozen=True)
class BibRecord:
    paper_id: str
    year: int
    venue: str
    field: str
    authors: tuple[str, ...]

    def __post_init__(self) -> None:
        authors = tuple(a.strip() for a in self.authors)
        if not authors or any(not a for a in authors):
            raise RecordError("author list is empty or has a blank name")
        if len(set(authors)) != len(authors):
            raise RecordError(f"duplicate author in record {self.paper_id!r}")
        if self.year <= 0:
            raise RecordError(f"year must be positive, got {self.year}")
        for name in ("paper_id", "venue", "field"):
            value = getattr(self, name).strip()
            if not value:
                raise RecordError(f"empty {name}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "authors", authors)


@dataclass
class ParseResult:
    records: list[BibRecord] = field(default_factory=list)
    errors: list[tuple[int, str]] = field(default_factory=list)


def parse_records(lines: Iterable[str]) -> ParseResult:
    """Parse ``paper_id<TAB>year<TAB>venue<TAB>field<TAB>a1|a2|...`` lines.

    Malformed lines are collected in ``errors`` as ``(lineno, message)``
    and skipped; parsing never aborts on a bad line.
    """
    out = ParseResult()
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 5:
            out.errors.append((lineno, f"expected 5 columns, got {len(cols)}"))
            continue
        paper_id, year, venue, fld, authors = cols
        try:
            year_int = int(year)
        except ValueError:
            out.errors.append((lineno, f"non-integer year {year!r}"))
            continue
        names = [a for a in authors.split("|")]
        try:
            out.records.append(BibRecord(paper_id, year_int, venue, fld, tuple(names)))
        except RecordError as exc:
            out.errors.append((lineno, str(exc)))
    for lineno, msg in out.errors:
        logger.warning("record line %d skipped: %s", lineno, msg)
    return out


def format_record(rec: BibRecord) -> str:
    return f"{rec.paper_id}\t{rec.year}\t{rec.venue}\t{rec.field}\t{'|'.join(rec.authors)}"


def write_records(records: Iterable[BibRecord], fh: TextIO) -> None:
    for rec in records:
        fh.write(format_record(rec) + "\n")


def temporal_split(
    records: Sequence[BibRecord], cutoff_year: int
) -> tuple[list[BibRecord], list[BibRecord]]:
    """Split into (year <= cutoff, year > cutoff), preserving order."""
    train = [r for r in records if r.year <= cutoff_year]
    held = [r for r in records if r.year > cutoff_year]
    return train, held


def build_network(records: Sequence[BibRecord], variant: str) -> TypedGraph:
    """Build one of the AA, APA, AVA or ALL networks (frozen).

    ALL holds Author-Paper, Paper-Venue and Author-Venue edges; authors are
    never linked directly to each other there.
    """
    variant = variant.upper()
    if variant not in NETWORK_VARIANTS:
        raise ValueError(f"unknown network variant {variant!r}; expected one of {NETWORK_VARIANTS}")
    if not records:
        raise ValueError("cannot build a network from zero records")
    g = TypedGraph()
    for rec in records:
        authors = [g.add_node(AUTHOR, a) for a in rec.authors]
        if variant == "AA":
            for u, v in combinations(authors, 2):
                g.add_edge(u, v)
            continue
        if variant in ("APA", "ALL"):
            paper = g.add_node(PAPER, rec.paper_id)
            for a in authors:
                g.add_edge(a, paper)
        if variant in ("AVA", "ALL"):
            venue = g.add_node(VENUE, rec.venue)
            for a in authors:
                g.add_edge(a, venue)
        if variant == "ALL":
            g.add_edge(paper, venue)
    return g.freeze()


def derive_author_labels(records: Iterable[BibRecord]) -> dict[str, str]:
    """Map each author to the field with most publications; ties go to the smallest name."""
    counts: dict[str, Counter] = defaultdict(Counter)
    for rec in records:
        for a in rec.authors:
            counts[a][rec.field] += 1
    return {a: min(c.items(), key=lambda kv: (-kv[1], kv[0]))[0] for a, c in counts.items()}


def write_labels(labels: dict[str, str], fh: TextIO) -> None:
    for author in sorted(labels):
        fh.write(f"{author}\t{labels[author]}\n")


def read_labels(lines: Iterable[str]) -> dict[str, str]:
    labels = {}
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise RecordError(f"label line {lineno}: expected author<TAB>field")
        labels[parts[0]] = parts[1]
    return labels


@dataclass(frozen=True)
class SynthConfig:
    """Planted-partition bibliographic corpus.

    Each author has a home area. Every paper has a focal author; each
    co-author comes from the focal author's area with probability
    ``1 - cross_area_probability`` and uniformly from everyone otherwise.
    The venue is drawn from the focal area's venue pool and the paper's
    field is that area.
    """

    num_authors: int = 500
    num_areas: int = 5
    num_venues_per_area: int = 4
    papers_per_author: float = 4.0
    coauthors_per_paper: float = 2.0
    cross_area_probability: float = 0.1
    seed: int = 0
    start_year: int = 1990
    cutoff_year: int = 2008
    end_year: int = 2011
    eval_fraction: float = 0.25

    def validate(self) -> None:
        for name in ("num_authors", "num_areas", "num_venues_per_area"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.papers_per_author <= 0:
            raise ValueError("papers_per_author must be positive")
        if self.coauthors_per_paper < 0:
            raise ValueError("coauthors_per_paper must be non-negative")
        if not 0.0 <= self.cross_area_probability <= 1.0:
            raise ValueError("cross_area_probability must lie in [0, 1]")
        if not 0.0 <= self.eval_fraction < 1.0:
            raise ValueError("eval_fraction must lie in [0, 1)")
        if not self.start_year <= self.cutoff_year < self.end_year:
            raise ValueError("need start_year <= cutoff_year < end_year")
        if self.start_year <= 0:
            raise ValueError("years must be positive")
        if self.num_areas > self.num_authors:
            raise ValueError("more areas than authors")
        smallest_area = self.num_authors // self.num_areas
        if self.coauthors_per_paper + 1 > smallest_area:
            raise ValueError(
                f"coauthors_per_paper={self.coauthors_per_paper} infeasible with "
                f"{smallest_area} authors in the smallest area"
            )


def synth_generate(config: SynthConfig) -> list[BibRecord]:
    """Generate a deterministic planted-area corpus from ``config``."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n_auth, n_areas = config.num_authors, config.num_areas
    width = len(str(n_auth - 1))
    names = [f"author{i:0{width}d}" for i in range(n_auth)]
    # round-robin home areas keep area sizes balanced
    home = np.arange(n_auth) % n_areas
    members = [np.flatnonzero(home == k) for k in range(n_areas)]
    venues = [
        [f"venue{k}_{j}" for j in range(config.num_venues_per_area)] for k in range(n_areas)
    ]
    fields = [f"area{k}" for k in range(n_areas)]

    records: list[BibRecord] = []
    n_papers = rng.poisson(config.papers_per_author, size=n_auth)
    max_coauthors = n_auth - 1
    for focal in range(n_auth):
        area = home[focal]
        pool = members[area]
        for _ in range(n_papers[focal]):
            k = min(int(rng.poisson(config.coauthors_per_paper)), max_coauthors, len(pool) - 1)
            team = [focal]
            chosen = {focal}
            while len(team) < k + 1:
                if rng.random() < config.cross_area_probability:
                    cand = int(rng.integers(n_auth))
                else:
                    cand = int(pool[rng.integers(len(pool))])
                if cand not in chosen:
                    chosen.add(cand)
                    team.append(cand)
            venue = venues[area][int(rng.integers(config.num_venues_per_area))]
            if rng.random() < config.eval_fraction:
                year = int(rng.integers(config.cutoff_year + 1, config.end_year + 1))
            else:
                year = int(rng.integers(config.start_year, config.cutoff_year + 1))
            pid = f"paper{len(records):06d}"
            records.append(
                BibRecord(pid, year, venue, fields[area], tuple(names[i] for i in team))
            )
    return records

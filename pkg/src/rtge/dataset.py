"""Temporally scoped triple datasets: parsing, time binning, per-bin subgraphs.

A fact is a (head, relation, tail) triple with a validity interval given in
years.  Either bound may be open (token "-" in the text format).  Facts are
clubbed into T time bins by a greedy frequency scan, and each bin owns a
static subgraph containing every fact whose validity span intersects it.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO

from .errors import EmptyDomainError, ParseError, ValidationError

# Open (unbounded) interval ends are represented as None; "-" in files.
OPEN = None

_YEAR_RE = re.compile(r"^-?\d{1,4}$")


@dataclass(frozen=True)
class Fact:
    """One temporally scoped triple with dense integer ids."""

    head: int
    relation: int
    tail: int
    start_year: Optional[int]
    end_year: Optional[int]

    def __post_init__(self):
        if (
            self.start_year is not None
            and self.end_year is not None
            and self.start_year > self.end_year
        ):
            raise ValidationError(
                f"start year {self.start_year} after end year {self.end_year}"
            )


def _parse_year(token: str, line_no: int) -> Optional[int]:
    if token == "-":
        return OPEN
    if not _YEAR_RE.match(token):
        raise ParseError(line_no, f"bad year field {token!r} (expected year or '-')")
    return int(token)


def parse_facts(
    stream: Iterable[str],
    entity_ids: Optional[dict[str, int]] = None,
    relation_ids: Optional[dict[str, int]] = None,
):
    """Parse tab-separated quintuple lines into facts and label vocabularies.

    Lines: head, relation, tail, start, end.  Blank lines and lines starting
    with '#' are skipped.  Labels are assigned dense ids in first-appearance
    order.  Pass existing id dicts to share (and extend) a vocabulary across
    several files.  Returns (facts, entity_labels, relation_labels).
    """
    entity_ids = {} if entity_ids is None else entity_ids
    relation_ids = {} if relation_ids is None else relation_ids
    facts: list[Fact] = []

    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ParseError(line_no, f"expected 5 tab-separated fields, got {len(fields)}")
        h_lab, r_lab, t_lab, s_tok, e_tok = fields
        start = _parse_year(s_tok, line_no)
        end = _parse_year(e_tok, line_no)
        h = entity_ids.setdefault(h_lab, len(entity_ids))
        t = entity_ids.setdefault(t_lab, len(entity_ids))
        r = relation_ids.setdefault(r_lab, len(relation_ids))
        try:
            facts.append(Fact(h, r, t, start, end))
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from exc

    entity_labels = list(entity_ids)
    relation_labels = list(relation_ids)
    return facts, entity_labels, relation_labels


def serialize_facts(
    facts: Sequence[Fact],
    entity_labels: Sequence[str],
    relation_labels: Sequence[str],
    out: TextIO,
) -> None:
    """Inverse of parse_facts for the same vocabularies."""
    for f in facts:
        s = "-" if f.start_year is None else str(f.start_year)
        e = "-" if f.end_year is None else str(f.end_year)
        out.write(
            f"{entity_labels[f.head]}\t{relation_labels[f.relation]}"
            f"\t{entity_labels[f.tail]}\t{s}\t{e}\n"
        )


@dataclass(frozen=True)
class TimeBinning:
    """T half-open year intervals given by their ascending left edges.

    Interval t covers [boundaries[t], boundaries[t+1]); the last interval is
    unbounded on the right.  Years below boundaries[0] clamp to bin 0.
    """

    boundaries: tuple[int, ...]
    min_triples: int

    @property
    def num_bins(self) -> int:
        return len(self.boundaries)

    def bin_of_year(self, year: int) -> int:
        idx = bisect_right(self.boundaries, year) - 1
        return max(idx, 0)

    def span_bins(self, start: Optional[int], end: Optional[int]) -> range:
        """Bins intersected by [start, end]; open ends map to the extremes."""
        lo = 0 if start is None else self.bin_of_year(start)
        hi = self.num_bins - 1 if end is None else self.bin_of_year(end)
        return range(lo, hi + 1)


def year_mention_counts(facts: Iterable[Fact]) -> dict[int, int]:
    """Count bounded start/end year mentions over a fact sequence."""
    counts: dict[int, int] = {}
    for f in facts:
        for y in (f.start_year, f.end_year):
            if y is not None:
                counts[y] = counts.get(y, 0) + 1
    return counts


def compute_binning(facts: Sequence[Fact], min_triples: int) -> TimeBinning:
    """Club consecutive years into intervals by a greedy left-to-right scan.

    Years whose own mention count reaches min_triples become singleton
    intervals (closing any pending accumulation early); otherwise consecutive
    years accumulate until the threshold is met.  A trailing undersized
    interval is merged into its predecessor.
    """
    if min_triples < 1:
        raise ValidationError(f"min_triples must be >= 1, got {min_triples}")
    counts = year_mention_counts(facts)
    if not counts:
        raise EmptyDomainError("no bounded years in any fact")

    edges: list[int] = []
    cur_start: Optional[int] = None
    acc = 0
    for year in sorted(counts):
        c = counts[year]
        if c >= min_triples:
            if cur_start is not None:
                edges.append(cur_start)
                cur_start, acc = None, 0
            edges.append(year)
        else:
            if cur_start is None:
                cur_start = year
            acc += c
            if acc >= min_triples:
                edges.append(cur_start)
                cur_start, acc = None, 0
    if cur_start is not None and not edges:
        edges.append(cur_start)
    # else: trailing undersized interval merges into its predecessor

    return TimeBinning(tuple(edges), min_triples)


Triple = tuple[int, int, int]


@dataclass
class TemporalGraph:
    """Vocabulary sizes plus T per-bin static subgraphs with O(1) membership."""

    num_entities: int
    num_relations: int
    binning: TimeBinning
    bins: list[set[Triple]]
    global_set: set[Triple] = field(default_factory=set)
    entity_labels: Optional[list[str]] = None
    relation_labels: Optional[list[str]] = None

    @property
    def num_bins(self) -> int:
        return self.binning.num_bins

    def in_bin(self, triple: Triple, t: int) -> bool:
        return triple in self.bins[t]

    def observed(self, triple: Triple) -> bool:
        return triple in self.global_set


def materialize(
    facts: Sequence[Fact],
    binning: TimeBinning,
    num_entities: Optional[int] = None,
    num_relations: Optional[int] = None,
    entity_labels: Optional[list[str]] = None,
    relation_labels: Optional[list[str]] = None,
) -> TemporalGraph:
    """Place every fact into each bin its validity span intersects."""
    if num_entities is None:
        num_entities = 1 + max(max(f.head, f.tail) for f in facts)
    if num_relations is None:
        num_relations = 1 + max(f.relation for f in facts)
    bins: list[set[Triple]] = [set() for _ in range(binning.num_bins)]
    global_set: set[Triple] = set()
    for f in facts:
        triple = (f.head, f.relation, f.tail)
        for t in binning.span_bins(f.start_year, f.end_year):
            bins[t].add(triple)
        global_set.add(triple)
    return TemporalGraph(
        num_entities,
        num_relations,
        binning,
        bins,
        global_set,
        entity_labels,
        relation_labels,
    )


def collapse_to_single_bin(graph: TemporalGraph) -> TemporalGraph:
    """Merge all bins into one (used by the time-agnostic baseline mode)."""
    binning = TimeBinning((graph.binning.boundaries[0],), graph.binning.min_triples)
    return TemporalGraph(
        graph.num_entities,
        graph.num_relations,
        binning,
        [set(graph.global_set)],
        set(graph.global_set),
        graph.entity_labels,
        graph.relation_labels,
    )


# ---------------------------------------------------------------------------
# Preprocessed-graph cache

_CACHE_MAGIC = "RTGE-CACHE v1"


def save_cache(
    facts: Sequence[Fact],
    binning: TimeBinning,
    entity_labels: Sequence[str],
    relation_labels: Sequence[str],
    out: TextIO,
) -> None:
    out.write(_CACHE_MAGIC + "\n")
    out.write(
        f"meta ne={len(entity_labels)} nr={len(relation_labels)} "
        f"T={binning.num_bins} min_triples={binning.min_triples}\n"
    )
    out.write("boundaries " + " ".join(str(b) for b in binning.boundaries) + "\n")
    for lab in entity_labels:
        out.write(f"E {lab}\n")
    for lab in relation_labels:
        out.write(f"R {lab}\n")
    for f in facts:
        s = "-" if f.start_year is None else str(f.start_year)
        e = "-" if f.end_year is None else str(f.end_year)
        out.write(f"F {f.head} {f.relation} {f.tail} {s} {e}\n")


def load_cache(stream: TextIO):
    """Returns (facts, binning, entity_labels, relation_labels)."""
    lines = iter(stream)
    header = next(lines, "").rstrip("\n")
    if header != _CACHE_MAGIC:
        raise ValidationError(f"bad cache header {header!r}")
    meta = next(lines, "").split()
    kv = dict(item.split("=") for item in meta[1:])
    boundaries_line = next(lines, "").split()
    binning = TimeBinning(
        tuple(int(b) for b in boundaries_line[1:]), int(kv["min_triples"])
    )
    entity_labels: list[str] = []
    relation_labels: list[str] = []
    facts: list[Fact] = []
    for line in lines:
        parts = line.rstrip("\n").split(" ")
        if parts[0] == "E":
            entity_labels.append(" ".join(parts[1:]))
        elif parts[0] == "R":
            relation_labels.append(" ".join(parts[1:]))
        elif parts[0] == "F":
            h, r, t = int(parts[1]), int(parts[2]), int(parts[3])
            s = None if parts[4] == "-" else int(parts[4])
            e = None if parts[5] == "-" else int(parts[5])
            facts.append(Fact(h, r, t, s, e))
    if len(entity_labels) != int(kv["ne"]) or len(relation_labels) != int(kv["nr"]):
        raise ValidationError("cache vocabulary sizes do not match header")
    return facts, binning, entity_labels, relation_labels

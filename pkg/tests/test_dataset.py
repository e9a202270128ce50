import io

import pytest

from rtge.dataset import (
    OPEN,
    Fact,
    compute_binning,
    load_cache,
    materialize,
    parse_facts,
    save_cache,
    serialize_facts,
)
from rtge.errors import EmptyDomainError, ParseError, ValidationError


def test_parse_first_appearance_ids():
    facts, ents, rels = parse_facts(["A\tlivesIn\tB\t2018\t2018"])
    assert facts == [Fact(0, 0, 1, 2018, 2018)]
    assert ents == ["A", "B"]
    assert rels == ["livesIn"]


def test_parse_open_interval_token():
    facts, _, _ = parse_facts(["A\tlivesIn\tB\t-\t2019"])
    assert facts[0].start_year is OPEN
    assert facts[0].end_year == 2019


def test_parse_arity_error_carries_line_number():
    with pytest.raises(ParseError) as exc:
        parse_facts(["A\tlivesIn\tB\t2000\t2001", "A\tlivesIn"])
    assert exc.value.line_no == 2


def test_parse_rejects_month_day():
    with pytest.raises(ParseError):
        parse_facts(["A\tr\tB\t2018-05-12\t2018"])


def test_parse_start_after_end():
    with pytest.raises(ValidationError):
        parse_facts(["A\tr\tB\t2019\t2018"])


def test_parse_skips_comments_and_blank_lines():
    facts, _, _ = parse_facts(["# header", "", "A\tr\tB\t2000\t2000"])
    assert len(facts) == 1


def test_serialize_round_trip():
    lines = [
        "A\tr1\tB\t2000\t2005",
        "B\tr2\tC\t-\t1999",
        "C\tr1\tA\t1320\t-",
    ]
    facts, ents, rels = parse_facts(lines)
    buf = io.StringIO()
    serialize_facts(facts, ents, rels, buf)
    facts2, ents2, rels2 = parse_facts(buf.getvalue().splitlines())
    assert facts2 == facts and ents2 == ents and rels2 == rels


def _facts_with_counts(counts):
    """One fact per mention: start-year mentions only (end on same year
    doubles the count, so use open ends)."""
    facts = []
    for year, n in counts.items():
        for _ in range(n):
            facts.append(Fact(0, 0, 1, year, None))
    return facts


def test_binning_greedy_trace():
    # hand-traced greedy scan: {2000:5, 2001:1, 2002:1, 2003:4}, threshold 3
    facts = _facts_with_counts({2000: 5, 2001: 1, 2002: 1, 2003: 4})
    b = compute_binning(facts, 3)
    assert b.boundaries == (2000, 2001, 2003)
    assert b.num_bins == 3


def test_binning_single_year():
    b = compute_binning(_facts_with_counts({2000: 10}), 3)
    assert b.num_bins == 1
    assert b.boundaries == (2000,)


def test_binning_trailing_merge_left():
    b = compute_binning(_facts_with_counts({2000: 5, 2001: 1}), 3)
    assert b.boundaries == (2000,)


def test_binning_deterministic():
    facts = _facts_with_counts({1990: 2, 1995: 2, 2000: 7, 2003: 1})
    assert compute_binning(facts, 3) == compute_binning(facts, 3)


def test_binning_requires_bounded_years():
    with pytest.raises(EmptyDomainError):
        compute_binning([Fact(0, 0, 1, None, None)], 3)


def test_binning_rejects_bad_threshold():
    with pytest.raises(ValidationError):
        compute_binning(_facts_with_counts({2000: 1}), 0)


def _yearly_graph(facts):
    counts = {}
    for f in facts:
        for y in (f.start_year, f.end_year):
            if y is not None:
                counts[y] = counts.get(y, 0) + 1
    binning = compute_binning(_facts_with_counts({y: 1 for y in counts}), 1)
    return materialize(facts, binning)


def test_materialize_span_inclusion():
    facts = [Fact(0, 0, 1, 2000, 2002), Fact(0, 0, 1, 2001, 2001)]
    g = _yearly_graph(facts)
    assert g.num_bins == 3
    assert all((0, 0, 1) in g.bins[t] for t in range(3))


def test_materialize_single_year_fact():
    facts = [Fact(0, 0, 1, 2000, 2000), Fact(1, 0, 0, 2001, 2001), Fact(0, 0, 1, 2002, 2002)]
    g = _yearly_graph(facts)
    assert (1, 0, 0) in g.bins[1]
    assert (1, 0, 0) not in g.bins[0] and (1, 0, 0) not in g.bins[2]


def test_materialize_open_start():
    facts = [
        Fact(0, 0, 1, 1990, 1990),
        Fact(0, 0, 1, 1995, 1995),
        Fact(0, 0, 1, 2000, 2000),
        Fact(2, 0, 1, None, 2000),
    ]
    g = _yearly_graph(facts)
    assert all((2, 0, 1) in g.bins[t] for t in range(g.num_bins))


def test_union_of_bins_equals_global_set():
    facts = [Fact(0, 0, 1, 2000, 2001), Fact(1, 0, 2, 2001, 2001), Fact(2, 1, 0, 2000, 2000)]
    g = _yearly_graph(facts)
    assert set().union(*g.bins) == g.global_set


def test_partition_property():
    # sum of bin sizes >= #facts, equal iff every fact spans one bin
    single = [Fact(0, 0, 1, 2000, 2000), Fact(1, 0, 2, 2001, 2001)]
    g = _yearly_graph(single)
    assert sum(len(b) for b in g.bins) == len(single)
    spanning = single + [Fact(2, 0, 0, 2000, 2001)]
    g = _yearly_graph(spanning)
    assert sum(len(b) for b in g.bins) > len(spanning)


def test_cache_round_trip(tmp_path):
    lines = ["A\tr1\tB\t2000\t2005", "B\tr2\tC c\t-\t1999"]
    facts, ents, rels = parse_facts(lines)
    binning = compute_binning(facts, 1)
    buf = io.StringIO()
    save_cache(facts, binning, ents, rels, buf)
    facts2, binning2, ents2, rels2 = load_cache(io.StringIO(buf.getvalue()))
    assert facts2 == facts and binning2 == binning
    assert ents2 == ents and rels2 == rels

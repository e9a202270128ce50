"""Rank-based evaluation for the four prediction tasks, plus a synthetic
rotating-pattern graph generator for desk-scale experiments.

Ranks use mid-rank tie handling: rank = 1 + (#strictly smaller losses) +
round-half-up(#equal losses among the other candidates / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dataset import Fact, TemporalGraph
from .errors import ValidationError, VocabularyError
from .model import ModelState, score_candidates

TASKS = ("head", "tail", "relation", "time")


@dataclass
class RankReport:
    task: str
    ranks: list[int] = field(default_factory=list)
    filtered: bool = False

    @property
    def mean_rank(self) -> float:
        return math.fsum(self.ranks) / len(self.ranks)

    def hits(self, k: int) -> float:
        return sum(1 for r in self.ranks if r <= k) / len(self.ranks)


def _midrank(losses: np.ndarray, gold_index: int) -> int:
    gold_loss = losses[gold_index]
    others = np.delete(losses, gold_index)
    smaller = int(np.sum(others < gold_loss))
    equal = int(np.sum(others == gold_loss))
    return 1 + smaller + math.floor(equal / 2 + 0.5)


def _check_fact(state: ModelState, fact: Fact) -> None:
    if not (0 <= fact.head < state.num_entities and 0 <= fact.tail < state.num_entities):
        raise VocabularyError(f"entity id out of range in {fact}")
    if not 0 <= fact.relation < state.num_relations:
        raise VocabularyError(f"relation id {fact.relation} out of range")


def rank_query(
    state: ModelState,
    graph: TemporalGraph,
    fact: Fact,
    task: str,
    filtered: bool = False,
) -> int:
    """Rank of the gold answer among all candidates for the missing slot.

    Entity/relation tasks score in the first bin of the fact's validity
    span.  The time task ranks bins and returns the minimum rank over the
    gold span.  filtered removes candidates that form a triple observed in
    the relevant bin (the gold answer is always retained).
    """
    if task not in TASKS:
        raise ValidationError(f"task must be one of {TASKS}, got {task!r}")
    _check_fact(state, fact)
    h, r, t = fact.head, fact.relation, fact.tail
    gold_bins = list(graph.binning.span_bins(fact.start_year, fact.end_year))

    if task == "time":
        losses = score_candidates(state, h, r, t, "time")
        keep = np.ones(len(losses), dtype=bool)
        if filtered:
            gold_set = set(gold_bins)
            for b in range(len(losses)):
                if b not in gold_set and graph.in_bin((h, r, t), b):
                    keep[b] = False
        kept_losses = losses[keep]
        kept_ids = np.flatnonzero(keep)
        pos_of = {int(b): i for i, b in enumerate(kept_ids)}
        return min(_midrank(kept_losses, pos_of[b]) for b in gold_bins)

    bin_index = gold_bins[0]
    if task == "head":
        losses = score_candidates(state, None, r, t, "head", bin_index)
        gold, make = h, lambda c: (c, r, t)
    elif task == "tail":
        losses = score_candidates(state, h, r, None, "tail", bin_index)
        gold, make = t, lambda c: (h, r, c)
    else:
        losses = score_candidates(state, h, None, t, "relation", bin_index)
        gold, make = r, lambda c: (h, c, t)

    if filtered:
        keep = np.ones(len(losses), dtype=bool)
        for c in range(len(losses)):
            if c != gold and graph.in_bin(make(c), bin_index):
                keep[c] = False
        kept_losses = losses[keep]
        gold_pos = int(np.sum(keep[:gold]))
        return _midrank(kept_losses, gold_pos)
    return _midrank(losses, gold)


def evaluate(
    state: ModelState,
    graph: TemporalGraph,
    facts: Sequence[Fact],
    tasks: Iterable[str] = TASKS,
    filtered: bool = False,
) -> dict[str, RankReport]:
    if not facts:
        raise ValidationError("empty test set")
    reports: dict[str, RankReport] = {}
    for task in tasks:
        rep = RankReport(task=task, filtered=filtered)
        for fact in facts:
            rep.ranks.append(rank_query(state, graph, fact, task, filtered))
        reports[task] = rep
    return reports


def metrics_csv(reports: dict[str, RankReport]) -> str:
    lines = ["task,metric,value"]
    for task, rep in reports.items():
        lines.append(f"{task},mean_rank,{rep.mean_rank}")
        for k in range(1, 11):
            lines.append(f"{task},hits@{k},{rep.hits(k)}")
    return "\n".join(lines) + "\n"


def export_embeddings_csv(state: ModelState, out) -> None:
    """kind,id,v1..vd rows for entities (E), relations (R), hyperplanes (W)."""
    d = state.d
    out.write("kind,id," + ",".join(f"v{i + 1}" for i in range(d)) + "\n")
    for kind, table in (
        ("E", state.entity_table),
        ("R", state.relation_table),
        ("W", state.hyperplanes),
    ):
        for i, row in enumerate(table):
            out.write(f"{kind},{i}," + ",".join(format(v, ".17g") for v in row) + "\n")


# ---------------------------------------------------------------------------
# Synthetic rotating-pattern generator

BASE_YEAR = 2000


@dataclass
class SyntheticSpec:
    """Evolving community pattern: relation r links community r to a target
    community that rotates one step per bin, so the correct tail for a given
    (head, relation) depends on the bin."""

    num_entities: int = 50
    num_relations: int = 5
    num_bins: int = 8
    seed: int = 0
    rotation: int = 1
    confusable: bool = False

    def __post_init__(self):
        if self.num_entities < 10:
            raise ValidationError("need at least 10 entities")
        if self.num_bins < 2:
            raise ValidationError("need at least 2 bins")


def _pattern_facts(spec: SyntheticSpec) -> list[tuple[str, str, str, int]]:
    """(head label, relation label, tail label, year) tuples."""
    facts = []
    if spec.confusable:
        # all relations share one head pool and one tail pool; only the
        # tail offset identifies the relation
        half = spec.num_entities // 2
        heads = list(range(half))
        tails = list(range(half, spec.num_entities))
        for t in range(spec.num_bins):
            for r in range(spec.num_relations):
                tail = tails[(r + t * spec.rotation) % len(tails)]
                for h in heads:
                    facts.append((f"e{h}", f"r{r}", f"e{tail}", BASE_YEAR + t))
        return facts

    # relation r maps community r onto community r+1 by an index shift that
    # rotates one step per bin, so each (head, relation) pair's gold tail
    # moves through the target community over time
    k = spec.num_relations
    comms = [list(range(spec.num_entities))[i::k] for i in range(k)]
    for t in range(spec.num_bins):
        for r in range(k):
            src, dst = comms[r], comms[(r + 1) % k]
            for j, h in enumerate(src):
                tail = dst[(j + t * spec.rotation) % len(dst)]
                facts.append((f"e{h}", f"r{r}", f"e{tail}", BASE_YEAR + t))
    return facts


def generate_synthetic(spec: SyntheticSpec) -> dict[str, list[str]]:
    """Deterministic 80/10/10 split of the planted pattern as TSV lines."""
    facts = _pattern_facts(spec)
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(facts))
    lines = [
        f"{facts[i][0]}\t{facts[i][1]}\t{facts[i][2]}\t{facts[i][3]}\t{facts[i][3]}"
        for i in order
    ]
    n = len(lines)
    n_train = int(n * 0.8)
    n_valid = int(n * 0.1)
    return {
        "train": lines[:n_train],
        "valid": lines[n_train : n_train + n_valid],
        "test": lines[n_train + n_valid :],
    }


def write_synthetic(spec: SyntheticSpec, out_dir) -> None:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for split, lines in generate_synthetic(spec).items():
        (out / f"{split}.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

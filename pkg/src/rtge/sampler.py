"""Negative sampling and constraint construction.

Each positive triple in a bin is paired with entity-corrupted negatives
(head or tail replaced) and relation-corrupted negatives.  Corruptions that
are still observed under the configured filter scope are rejected and
redrawn; after a bounded number of retries the filter is relaxed to "any
differing id" so sampling always terminates (relaxation events are counted).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import TemporalGraph, Triple
from .errors import SamplerUnavailableError, ValidationError

HEAD, TAIL = 0, 2


@dataclass(frozen=True)
class ConstraintPair:
    """One positive with its paired entity- and relation-negative."""

    bin: int
    positive: Triple
    entity_negative: Triple
    relation_negative: Optional[Triple]


@dataclass
class ConstraintSet:
    """Array layout of constraint pairs for the numeric kernels."""

    bins: np.ndarray            # (C,) int64
    positives: np.ndarray       # (C, 3) int64 rows (h, r, t)
    entity_negatives: np.ndarray    # (C, 3)
    relation_negatives: np.ndarray  # (C, 3); ignored when not has_relation_negatives
    has_relation_negatives: bool

    def __len__(self) -> int:
        return len(self.bins)


class NegativeSampler:
    """Stateful sampler over one materialized graph.

    neg_filter "bin" rejects corruptions present in the positive's own bin;
    "global" rejects corruptions observed in any bin.
    """

    def __init__(
        self,
        graph: TemporalGraph,
        rng: np.random.Generator,
        neg_filter: str = "bin",
        max_retries: int = 100,
    ):
        if neg_filter not in ("bin", "global"):
            raise ValidationError(f"neg_filter must be 'bin' or 'global', got {neg_filter!r}")
        self.graph = graph
        self.rng = rng
        self.neg_filter = neg_filter
        self.max_retries = max_retries
        self.relaxations = 0

    def _observed(self, triple: Triple, t: int) -> bool:
        if self.neg_filter == "bin":
            return self.graph.in_bin(triple, t)
        return self.graph.observed(triple)

    def _other_id(self, current: int, n: int) -> int:
        """Uniform draw over [0, n) excluding current."""
        draw = int(self.rng.integers(n - 1))
        return draw + 1 if draw >= current else draw

    def sample_entity_negative(
        self, positive: Triple, t: int, slot: Optional[int] = None
    ) -> Triple:
        """Corrupt head or tail (fair coin unless slot is forced)."""
        n = self.graph.num_entities
        if n < 2:
            raise SamplerUnavailableError("need at least 2 entities")
        if slot is None:
            slot = HEAD if self.rng.integers(2) == 0 else TAIL
        for _ in range(self.max_retries):
            cand = list(positive)
            cand[slot] = int(self.rng.integers(n))
            cand = tuple(cand)
            if cand != positive and not self._observed(cand, t):
                return cand
        self.relaxations += 1
        cand = list(positive)
        cand[slot] = self._other_id(positive[slot], n)
        return tuple(cand)

    def sample_relation_negative(self, positive: Triple, t: int) -> Triple:
        n = self.graph.num_relations
        if n < 2:
            raise SamplerUnavailableError(
                "relation negatives need at least 2 relations; run with beta=0"
            )
        for _ in range(self.max_retries):
            cand = (positive[0], int(self.rng.integers(n)), positive[2])
            if cand != positive and not self._observed(cand, t):
                return cand
        self.relaxations += 1
        return (positive[0], self._other_id(positive[1], n), positive[2])

    def build_constraints(
        self, m: int, include_relation_negatives: bool = True
    ) -> list[ConstraintPair]:
        """2m constraint pairs per positive: m head- and m tail-corruptions,
        relation negatives cycled twice across them."""
        if m < 1:
            raise ValidationError(f"m must be >= 1, got {m}")
        pairs: list[ConstraintPair] = []
        for t, subgraph in enumerate(self.graph.bins):
            for positive in sorted(subgraph):
                ent_negs = [
                    self.sample_entity_negative(positive, t, slot=HEAD) for _ in range(m)
                ] + [
                    self.sample_entity_negative(positive, t, slot=TAIL) for _ in range(m)
                ]
                if include_relation_negatives:
                    rel_negs = [
                        self.sample_relation_negative(positive, t) for _ in range(m)
                    ]
                else:
                    rel_negs = [None] * m
                for j, eneg in enumerate(ent_negs):
                    pairs.append(
                        ConstraintPair(t, positive, eneg, rel_negs[j % m])
                    )
        return pairs


def to_constraint_set(pairs: list[ConstraintPair]) -> ConstraintSet:
    """Pack constraint pairs into contiguous arrays."""
    c = len(pairs)
    bins = np.empty(c, dtype=np.int64)
    pos = np.empty((c, 3), dtype=np.int64)
    eneg = np.empty((c, 3), dtype=np.int64)
    rneg = np.zeros((c, 3), dtype=np.int64)
    has_rel = bool(pairs) and pairs[0].relation_negative is not None
    for i, p in enumerate(pairs):
        bins[i] = p.bin
        pos[i] = p.positive
        eneg[i] = p.entity_negative
        if has_rel:
            rneg[i] = p.relation_negative
    return ConstraintSet(bins, pos, eneg, rneg, has_rel)

"""Alternating gradient descent over hyperplanes and embeddings.

One outer iteration takes a single gradient step on every w_t with the
embeddings fixed, then a single step on the entity/relation tables with the
updated hyperplanes fixed.  Constraints are sampled once up front.  The
objective is

    alpha * smoothness + sum of hinge terms
    + xi * sum_t (|w_t| - 1)^2
    + xi * sum over entity rows (|e| - 1)^2 + xi * sum over relation rows (|l| - 1)^2

with the hinge  max(2 L(pos) + gamma - L(eneg) - beta L(rneg), 0)  evaluated
on raw (unnormalized) hyperplanes.  The entity penalty is applied once per
row of the shared entity table.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .dataset import TemporalGraph, collapse_to_single_bin
from .errors import DivergenceError, ValidationError
from .model import MODES, HyperParams, ModelState, init, triple_loss
from .sampler import ConstraintPair, ConstraintSet, NegativeSampler, to_constraint_set


@dataclass
class TrainReport:
    objectives: list[float] = field(default_factory=list)
    task_losses: list[float] = field(default_factory=list)
    smooth_losses: list[float] = field(default_factory=list)   # alpha included
    penalty_losses: list[float] = field(default_factory=list)  # xi included
    iterations: int = 0
    converged: bool = False
    relaxations: int = 0


def smoothness_loss(W: np.ndarray) -> float:
    """Sum of L2 distances between consecutive hyperplanes (0 for T=1)."""
    if W.shape[0] < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(W, axis=0), axis=1).sum())


def hinge_term(pair: ConstraintPair, state: ModelState, hp: HyperParams) -> float:
    """Hinge value of one constraint pair under raw hyperplanes."""
    E, R = state.entity_table, state.relation_table
    w = state.hyperplanes[pair.bin]

    def loss(triple):
        h, r, t = triple
        return triple_loss(E[h], R[r], E[t], w)

    margin = 2.0 * loss(pair.positive) + hp.gamma - loss(pair.entity_negative)
    if pair.relation_negative is not None:
        margin -= hp.beta * loss(pair.relation_negative)
    return max(margin, 0.0)


def _norm_penalty(table: np.ndarray) -> float:
    return float(np.sum((np.linalg.norm(table, axis=1) - 1.0) ** 2))


def _norm_penalty_grad(table: np.ndarray) -> np.ndarray:
    """d/dx of (|x| - 1)^2 per row: 2 (|x| - 1) x / |x|; 0 at x = 0."""
    norms = np.linalg.norm(table, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    scale = np.where(norms > 0.0, 2.0 * (norms - 1.0) / safe, 0.0)
    return scale[:, None] * table


def _smoothness_grad(W: np.ndarray) -> np.ndarray:
    """Subgradient of sum |w_{t+1} - w_t|; zero where adjacent rows coincide."""
    g = np.zeros_like(W)
    diffs = np.diff(W, axis=0)
    norms = np.linalg.norm(diffs, axis=1)
    for t in range(len(diffs)):
        if norms[t] > 0.0:
            unit = diffs[t] / norms[t]
            g[t] -= unit
            g[t + 1] += unit
    return g


def objective(state: ModelState, cset: ConstraintSet, hp: HyperParams):
    """Full objective plus its (task, alpha*smooth, xi*penalty) breakdown."""
    margins = kernels.hinge_margins(
        state.entity_table,
        state.relation_table,
        state.hyperplanes,
        cset.bins,
        cset.positives,
        cset.entity_negatives,
        cset.relation_negatives,
        hp.gamma,
        hp.beta,
        cset.has_relation_negatives,
    )
    task = float(np.sum(np.maximum(margins, 0.0)))
    smooth = hp.alpha * smoothness_loss(state.hyperplanes)
    penalty = hp.xi * (
        _norm_penalty(state.hyperplanes)
        + _norm_penalty(state.entity_table)
        + _norm_penalty(state.relation_table)
    )
    total = task + smooth + penalty
    return total, {"task": task, "smooth": smooth, "penalty": penalty}


def _task_grads(state: ModelState, cset: ConstraintSet, hp: HyperParams):
    gE, gR, gW, task_loss, _ = kernels.task_gradients(
        state.entity_table,
        state.relation_table,
        state.hyperplanes,
        cset.bins,
        cset.positives,
        cset.entity_negatives,
        cset.relation_negatives,
        hp.gamma,
        hp.beta,
        cset.has_relation_negatives,
    )
    return gE, gR, gW, task_loss


def gradients(state: ModelState, cset: ConstraintSet, hp: HyperParams):
    """Analytic gradient of `objective` for every parameter, as a dict.

    The hinge indicator fires when 2 L(pos) + gamma - L(eneg) - beta L(rneg)
    is strictly positive; subgradients at nondifferentiable points are 0.
    """
    gE, gR, gW, _ = _task_grads(state, cset, hp)
    gW = gW + hp.alpha * _smoothness_grad(state.hyperplanes)
    gW += hp.xi * _norm_penalty_grad(state.hyperplanes)
    gE = gE + hp.xi * _norm_penalty_grad(state.entity_table)
    gR = gR + hp.xi * _norm_penalty_grad(state.relation_table)
    return {"entity": gE, "relation": gR, "hyperplanes": gW}


def resolve_mode(hp: HyperParams, mode: str):
    """Apply a mode preset; returns (effective hp, use_relation_negatives,
    collapse_bins)."""
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "RTGE":
        return hp, True, False
    if mode == "RTGE-s":
        return replace(hp, beta=0.0), False, False
    if mode == "RTGE-n":
        return replace(hp, alpha=0.0), True, False
    if mode == "HyTE-baseline":
        # relation negatives stay in the stream with weight 0 so that the
        # trajectory is bit-identical to RTGE run with alpha=0, beta=0
        return replace(hp, alpha=0.0, beta=0.0), True, False
    # TransE-baseline: one bin, hyperplane pinned at 0 (projection = identity)
    return replace(hp, alpha=0.0, beta=0.0), True, True


def fit(
    graph: TemporalGraph,
    hp: HyperParams,
    mode: str = "RTGE",
    seed: int = 0,
    neg_filter: str = "bin",
    batch_size: int = 0,
):
    """Train a model on a materialized graph; returns (state, TrainReport)."""
    hp, use_rel, collapse = resolve_mode(hp, mode)
    if collapse:
        graph = collapse_to_single_bin(graph)

    rng = np.random.default_rng(seed)
    state = init(graph.num_entities, graph.num_relations, graph.num_bins, hp, seed)
    if collapse:
        state.hyperplanes[:] = 0.0  # identity projection; gradient stays 0

    sampler = NegativeSampler(graph, rng, neg_filter=neg_filter)
    pairs = sampler.build_constraints(hp.m, include_relation_negatives=use_rel)
    cset = to_constraint_set(pairs)
    report = TrainReport(relaxations=sampler.relaxations)
    if len(cset) == 0 or hp.kappa == 0:
        return state, report

    num_c = len(cset)
    bsz = num_c if batch_size <= 0 else min(batch_size, num_c)
    cursor = 0

    prev_j = None
    for rho in range(hp.kappa):
        if bsz == num_c:
            batch = cset
        else:
            idx = np.arange(cursor, cursor + bsz) % num_c
            cursor = (cursor + bsz) % num_c
            batch = ConstraintSet(
                cset.bins[idx],
                cset.positives[idx],
                cset.entity_negatives[idx],
                cset.relation_negatives[idx],
                cset.has_relation_negatives,
            )

        # stage 1: hyperplanes with embeddings fixed
        _, _, gW, _ = _task_grads(state, batch, hp)
        gW = gW + hp.alpha * _smoothness_grad(state.hyperplanes)
        gW += hp.xi * _norm_penalty_grad(state.hyperplanes)
        state.hyperplanes -= hp.psi * gW

        # stage 2: embeddings with the updated hyperplanes fixed
        gE, gR, _, _ = _task_grads(state, batch, hp)
        gE += hp.xi * _norm_penalty_grad(state.entity_table)
        gR += hp.xi * _norm_penalty_grad(state.relation_table)
        state.entity_table -= hp.psi * gE
        state.relation_table -= hp.psi * gR

        j, parts = objective(state, cset, hp)
        if not np.isfinite(j):
            raise DivergenceError(rho)
        report.objectives.append(j)
        report.task_losses.append(parts["task"])
        report.smooth_losses.append(parts["smooth"])
        report.penalty_losses.append(parts["penalty"])
        report.iterations = rho + 1
        if prev_j is not None and abs(j - prev_j) < hp.epsilon:
            report.converged = True
            break
        prev_j = j

    return state, report

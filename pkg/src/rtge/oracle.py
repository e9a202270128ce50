"""Brute-force reference implementations used only by tests.

Everything here is written straight from the defining formulas with plain
loops, deliberately not reusing the production kernels it cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import HyperParams, ModelState
from .sampler import ConstraintSet


@dataclass
class FdSpec:
    step: float = 1e-6
    tolerance: float = 1e-4  # relative error bound for comparisons


def _loss_direct(E, R, W, triple, t) -> float:
    """Projection loss written out long-hand."""
    h, r, z = triple
    w = W[t]
    u = [E[h][k] + R[r][k] - E[z][k] for k in range(len(w))]
    q = sum(w[k] * u[k] for k in range(len(w)))
    return math.sqrt(sum((u[k] - q * w[k]) ** 2 for k in range(len(w))))


def margins_direct(state: ModelState, cset: ConstraintSet, hp: HyperParams):
    """Per-pair hinge margins 2 L+ + gamma - L-e - beta L-r, by plain loops."""
    E = state.entity_table.tolist()
    R = state.relation_table.tolist()
    W = state.hyperplanes.tolist()
    out = []
    for i in range(len(cset)):
        t = int(cset.bins[i])
        m = (
            2.0 * _loss_direct(E, R, W, cset.positives[i], t)
            + hp.gamma
            - _loss_direct(E, R, W, cset.entity_negatives[i], t)
        )
        if cset.has_relation_negatives:
            m -= hp.beta * _loss_direct(E, R, W, cset.relation_negatives[i], t)
        out.append(m)
    return out


def objective_direct(state: ModelState, cset: ConstraintSet, hp: HyperParams) -> float:
    """Straight-from-the-formula objective, independent of the trainer."""
    total = sum(max(m, 0.0) for m in margins_direct(state, cset, hp))
    W = state.hyperplanes
    for t in range(len(W) - 1):
        total += hp.alpha * math.sqrt(sum((W[t + 1][k] - W[t][k]) ** 2 for k in range(W.shape[1])))
    for table in (state.hyperplanes, state.entity_table, state.relation_table):
        for row in table:
            total += hp.xi * (math.sqrt(sum(v * v for v in row)) - 1.0) ** 2
    return total


def fd_gradient(
    state: ModelState,
    cset: ConstraintSet,
    hp: HyperParams,
    spec: FdSpec,
    objective_fn,
):
    """Central finite differences of objective_fn over every parameter.

    objective_fn(state) -> float is treated as a black box.  Returns
    (grads, masks): dicts keyed entity/relation/hyperplanes; masks flag
    coordinates safely away from hinge-activation boundaries (the hinge
    activation pattern is identical at both perturbed points and no margin
    sits within 10 * step of zero).
    """
    delta = spec.step
    base_margins = margins_direct(state, cset, hp)
    grads = {}
    masks = {}
    for name in ("entity", "relation", "hyperplanes"):
        table = getattr(state, _ATTR[name])
        g = np.zeros_like(table)
        ok = np.ones(table.shape, dtype=bool)
        for idx in np.ndindex(table.shape):
            orig = table[idx]
            table[idx] = orig + delta
            j_plus = objective_fn(state)
            act_plus = [m > 0.0 for m in margins_direct(state, cset, hp)]
            table[idx] = orig - delta
            j_minus = objective_fn(state)
            act_minus = [m > 0.0 for m in margins_direct(state, cset, hp)]
            table[idx] = orig
            g[idx] = (j_plus - j_minus) / (2.0 * delta)
            if act_plus != act_minus:
                ok[idx] = False
        if any(abs(m) < 10.0 * delta for m in base_margins):
            ok[:] = False
        grads[name] = g
        masks[name] = ok
    return grads, masks


_ATTR = {
    "entity": "entity_table",
    "relation": "relation_table",
    "hyperplanes": "hyperplanes",
}


def brute_rank(losses, gold_index: int) -> int:
    """Mid-rank of the gold candidate via a full stable sort."""
    values = sorted(float(v) for v in losses)
    gold = float(losses[gold_index])
    first = 1 + values.index(gold)
    last = first
    while last < len(values) and values[last] == gold:
        last += 1
    return math.floor((first + last) / 2 + 0.5)

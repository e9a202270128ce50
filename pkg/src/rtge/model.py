"""Learned parameters and the hyperplane projection / scoring math.

Entities live in one shared d-dimensional table (a vector serves as head or
tail by position), relations in another, and each time bin t owns a
hyperplane normal w_t.  A triple is scored by projecting head + relation -
tail onto bin t's hyperplane and taking the norm of the residual.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    CheckpointDimensionError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    ValidationError,
)

_CKPT_MAGIC = "RTGE-CKPT v1"

MODES = ("RTGE", "RTGE-s", "RTGE-n", "HyTE-baseline", "TransE-baseline")


@dataclass
class HyperParams:
    """Training hyperparameters; defaults follow the reference configuration."""

    d: int = 128
    gamma: float = 10.0      # hinge margin
    alpha: float = 0.1       # temporal-smoothness weight
    beta: float = 0.01       # relation-negative weight
    xi: float = 1.0          # soft unit-norm penalty weight
    psi: float = 1e-4        # learning rate
    kappa: int = 500         # max iterations
    epsilon: float = 1e-6    # convergence threshold on |dJ|
    m: int = 5               # negatives per group

    def __post_init__(self):
        if self.gamma <= 0 or self.psi <= 0:
            raise ValidationError("gamma and psi must be positive")
        if self.m < 1 or self.d < 1:
            raise ValidationError("m and d must be >= 1")
        if self.alpha < 0 or self.beta < 0 or self.xi < 0:
            raise ValidationError("alpha, beta, xi must be nonnegative")


@dataclass
class ModelState:
    """All learned parameters, float64 throughout."""

    entity_table: np.ndarray    # (N_e, d)
    relation_table: np.ndarray  # (N_r, d)
    hyperplanes: np.ndarray     # (T, d)

    @property
    def d(self) -> int:
        return self.entity_table.shape[1]

    @property
    def num_entities(self) -> int:
        return self.entity_table.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation_table.shape[0]

    @property
    def num_bins(self) -> int:
        return self.hyperplanes.shape[0]

    def copy(self) -> "ModelState":
        return replace(
            self,
            entity_table=self.entity_table.copy(),
            relation_table=self.relation_table.copy(),
            hyperplanes=self.hyperplanes.copy(),
        )


def init(
    num_entities: int, num_relations: int, num_bins: int, hp: HyperParams, seed: int
) -> ModelState:
    """Uniform init in [-6/sqrt(d), 6/sqrt(d)], rows rescaled to unit norm."""
    if min(num_entities, num_relations, num_bins) < 1:
        raise ValidationError("all counts must be >= 1")
    rng = np.random.default_rng(seed)
    bound = 6.0 / np.sqrt(hp.d)

    def table(n):
        x = rng.uniform(-bound, bound, size=(n, hp.d))
        return x / np.linalg.norm(x, axis=1, keepdims=True)

    return ModelState(table(num_entities), table(num_relations), table(num_bins))


def project(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """x minus its component along w: x - (w.x) w, with w taken as given."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if x.shape != w.shape:
        raise ValidationError(f"dimension mismatch: {x.shape} vs {w.shape}")
    return x - (w @ x) * w


def triple_loss(h, l, z, w, norm: str = "l2") -> float:
    """Norm of Q(h) + Q(l) - Q(z); projection is linear so project the sum."""
    residual = project(
        np.asarray(h, dtype=np.float64)
        + np.asarray(l, dtype=np.float64)
        - np.asarray(z, dtype=np.float64),
        w,
    )
    if norm == "l1":
        return float(np.abs(residual).sum())
    return float(np.linalg.norm(residual))


def _unit(w: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(w)
    if n < 1e-12:
        # degenerate normal: projection degrades to the identity
        return np.zeros_like(w)
    return w / n


def score_candidates(
    state: ModelState,
    head: int | None,
    relation: int | None,
    tail: int | None,
    missing: str,
    bin_index: int | None = None,
    candidate_ids=None,
    norm: str = "l2",
) -> np.ndarray:
    """Triple losses for each candidate filling the missing slot.

    missing is one of head/relation/tail/time.  Non-time queries score under
    the unit-normalized hyperplane of bin_index; time queries score the fixed
    triple under every bin's hyperplane (candidate_ids then selects bins).
    Candidate order is preserved.
    """
    E, R, W = state.entity_table, state.relation_table, state.hyperplanes

    if missing == "time":
        u = E[head] + R[relation] - E[tail]
        bins = np.arange(state.num_bins) if candidate_ids is None else np.asarray(candidate_ids)
        out = np.empty(len(bins), dtype=np.float64)
        for i, t in enumerate(bins):
            p = u - (_unit(W[t]) @ u) * _unit(W[t])
            out[i] = np.abs(p).sum() if norm == "l1" else np.linalg.norm(p)
        return out

    if bin_index is None or not (0 <= bin_index < state.num_bins):
        raise ValidationError(f"bin index {bin_index} out of [0, {state.num_bins})")
    w = _unit(W[bin_index])

    if missing == "head":
        cands = np.arange(state.num_entities) if candidate_ids is None else np.asarray(candidate_ids)
        D = E[cands] + (R[relation] - E[tail])
    elif missing == "relation":
        cands = np.arange(state.num_relations) if candidate_ids is None else np.asarray(candidate_ids)
        D = R[cands] + (E[head] - E[tail])
    elif missing == "tail":
        cands = np.arange(state.num_entities) if candidate_ids is None else np.asarray(candidate_ids)
        D = (E[head] + R[relation]) - E[cands]
    else:
        raise ValidationError(f"unknown missing slot {missing!r}")

    P = D - np.outer(D @ w, w)
    if norm == "l1":
        return np.abs(P).sum(axis=1)
    return np.linalg.norm(P, axis=1)


# ---------------------------------------------------------------------------
# Checkpoint persistence


def save_checkpoint(state: ModelState, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_checkpoint(state, f)


def write_checkpoint(state: ModelState, out) -> None:
    d = state.d
    out.write(_CKPT_MAGIC + "\n")
    out.write(
        f"meta d={d} T={state.num_bins} ne={state.num_entities} nr={state.num_relations}\n"
    )

    def rows(tag, table):
        for i, row in enumerate(table):
            vals = " ".join(format(v, ".17g") for v in row)
            out.write(f"{tag} {i} {vals}\n")

    rows("E", state.entity_table)
    rows("R", state.relation_table)
    rows("W", state.hyperplanes)


def load_checkpoint(path) -> ModelState:
    with open(path, "r", encoding="utf-8") as f:
        return read_checkpoint(f)


def read_checkpoint(stream) -> ModelState:
    header = stream.readline().rstrip("\n")
    if header != _CKPT_MAGIC:
        raise CheckpointVersionError(f"unsupported checkpoint header {header!r}")
    meta_line = stream.readline().split()
    if not meta_line or meta_line[0] != "meta":
        raise CheckpointTruncatedError("missing meta line")
    try:
        meta = dict(item.split("=") for item in meta_line[1:])
        d, T = int(meta["d"]), int(meta["T"])
        ne, nr = int(meta["ne"]), int(meta["nr"])
    except (KeyError, ValueError) as exc:
        raise CheckpointDimensionError(f"bad meta line: {exc}") from exc

    tables = {
        "E": np.zeros((ne, d)),
        "R": np.zeros((nr, d)),
        "W": np.zeros((T, d)),
    }
    seen = {"E": 0, "R": 0, "W": 0}
    for line in stream:
        parts = line.split()
        if not parts:
            continue
        tag = parts[0]
        if tag not in tables:
            raise CheckpointDimensionError(f"unknown row tag {tag!r}")
        if len(parts) != 2 + d:
            raise CheckpointDimensionError(
                f"{tag} row has {len(parts) - 2} values, expected {d}"
            )
        idx = int(parts[1])
        if not 0 <= idx < tables[tag].shape[0]:
            raise CheckpointDimensionError(f"{tag} row id {idx} out of range")
        tables[tag][idx] = [float(v) for v in parts[2:]]
        seen[tag] += 1
    expected = {"E": ne, "R": nr, "W": T}
    for tag, n in expected.items():
        if seen[tag] != n:
            raise CheckpointTruncatedError(
                f"expected {n} {tag} rows, found {seen[tag]}"
            )
    return ModelState(tables["E"], tables["R"], tables["W"])


def checkpoint_bytes(state: ModelState) -> bytes:
    buf = io.StringIO()
    write_checkpoint(state, buf)
    return buf.getvalue().encode("utf-8")

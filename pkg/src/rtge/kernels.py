"""Hot numeric kernels: hinge margins and task-loss gradients.

Two interchangeable backends share one contract:

* a numba @njit path (default when numba imports cleanly), and
* a pure-numpy fallback.

Selection: env var TKGE_BACKEND in {"numba", "numpy", "auto"} (default auto).
The active backend is resolved at import time; tests and the benchmark can
also call the *_numpy / *_numba functions directly.

All kernels take raw parameter tables plus the packed constraint arrays and
return per-pair margins 2*L(pos) + gamma - L(eneg) - beta*L(rneg) (the
relation term only when enabled) and, for the gradient kernel, dense
gradient accumulators over the entity/relation/hyperplane tables.
"""

from __future__ import annotations

import os

import numpy as np

_env = os.environ.get("TKGE_BACKEND", "auto").lower()
if _env not in ("auto", "numba", "numpy"):
    raise ValueError(f"TKGE_BACKEND must be auto|numba|numpy, got {_env!r}")

HAS_NUMBA = False
if _env in ("auto", "numba"):
    try:
        import numba  # noqa: F401
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        if _env == "numba":
            raise

BACKEND = "numba" if HAS_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy fallback


def _gather_proj_numpy(E, R, W_rows, triples):
    """Residuals p, inner products q = w.u and wp = w.p, and losses L."""
    u = E[triples[:, 0]] + R[triples[:, 1]] - E[triples[:, 2]]
    q = np.einsum("ij,ij->i", W_rows, u)
    p = u - q[:, None] * W_rows
    wp = np.einsum("ij,ij->i", W_rows, p)
    L = np.sqrt(np.einsum("ij,ij->i", p, p))
    return u, q, p, wp, L


def hinge_margins_numpy(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel):
    W_rows = W[bins]
    _, _, _, _, Lp = _gather_proj_numpy(E, R, W_rows, pos)
    _, _, _, _, Le = _gather_proj_numpy(E, R, W_rows, eneg)
    margins = 2.0 * Lp + gamma - Le
    if use_rel:
        _, _, _, _, Lr = _gather_proj_numpy(E, R, W_rows, rneg)
        margins = margins - beta * Lr
    return margins


def task_gradients_numpy(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel):
    """Returns (gE, gR, gW, task_loss, margins)."""
    W_rows = W[bins]
    groups = [(pos, 2.0), (eneg, -1.0)]
    proj = {id(pos): _gather_proj_numpy(E, R, W_rows, pos),
            id(eneg): _gather_proj_numpy(E, R, W_rows, eneg)}
    margins = 2.0 * proj[id(pos)][4] + gamma - proj[id(eneg)][4]
    if use_rel:
        proj[id(rneg)] = _gather_proj_numpy(E, R, W_rows, rneg)
        margins = margins - beta * proj[id(rneg)][4]
        groups.append((rneg, -beta))
    active = margins > 0.0
    task_loss = float(np.sum(margins[active]))

    gE = np.zeros_like(E)
    gR = np.zeros_like(R)
    gW = np.zeros_like(W)
    for triples, coef in groups:
        u, q, p, wp, L = proj[id(triples)]
        mask = active & (L > 0.0)
        scale = np.where(mask, coef / np.where(L > 0.0, L, 1.0), 0.0)
        gu = scale[:, None] * (p - wp[:, None] * W_rows)
        gw = -scale[:, None] * (wp[:, None] * u + q[:, None] * p)
        np.add.at(gE, triples[:, 0], gu)
        np.add.at(gR, triples[:, 1], gu)
        np.add.at(gE, triples[:, 2], -gu)
        np.add.at(gW, bins, gw)
    return gE, gR, gW, task_loss, margins


# ---------------------------------------------------------------------------
# numba path

if HAS_NUMBA:

    @njit(cache=True)
    def _triple_loss_nb(E, R, w, h, r, t):
        d = w.shape[0]
        q = 0.0
        for k in range(d):
            q += w[k] * (E[h, k] + R[r, k] - E[t, k])
        s = 0.0
        for k in range(d):
            pk = E[h, k] + R[r, k] - E[t, k] - q * w[k]
            s += pk * pk
        return np.sqrt(s)

    @njit(cache=True)
    def hinge_margins_numba(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel):
        C = bins.shape[0]
        margins = np.empty(C)
        for i in range(C):
            w = W[bins[i]]
            lp = _triple_loss_nb(E, R, w, pos[i, 0], pos[i, 1], pos[i, 2])
            le = _triple_loss_nb(E, R, w, eneg[i, 0], eneg[i, 1], eneg[i, 2])
            m = 2.0 * lp + gamma - le
            if use_rel:
                m -= beta * _triple_loss_nb(E, R, w, rneg[i, 0], rneg[i, 1], rneg[i, 2])
            margins[i] = m
        return margins

    @njit(cache=True)
    def _accum_triple_nb(E, R, gE, gR, gW, w, t_bin, h, r, t, coef, u, p):
        d = w.shape[0]
        q = 0.0
        for k in range(d):
            u[k] = E[h, k] + R[r, k] - E[t, k]
            q += w[k] * u[k]
        s = 0.0
        wp = 0.0
        for k in range(d):
            p[k] = u[k] - q * w[k]
            s += p[k] * p[k]
            wp += w[k] * p[k]
        L = np.sqrt(s)
        if L <= 0.0:
            return
        scale = coef / L
        for k in range(d):
            gu = scale * (p[k] - wp * w[k])
            gE[h, k] += gu
            gR[r, k] += gu
            gE[t, k] -= gu
            gW[t_bin, k] -= scale * (wp * u[k] + q * p[k])

    @njit(cache=True)
    def task_gradients_numba(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel):
        C = bins.shape[0]
        d = E.shape[1]
        gE = np.zeros_like(E)
        gR = np.zeros_like(R)
        gW = np.zeros_like(W)
        margins = np.empty(C)
        task_loss = 0.0
        u = np.empty(d)
        p = np.empty(d)
        for i in range(C):
            t_bin = bins[i]
            w = W[t_bin]
            lp = _triple_loss_nb(E, R, w, pos[i, 0], pos[i, 1], pos[i, 2])
            le = _triple_loss_nb(E, R, w, eneg[i, 0], eneg[i, 1], eneg[i, 2])
            m = 2.0 * lp + gamma - le
            if use_rel:
                m -= beta * _triple_loss_nb(E, R, w, rneg[i, 0], rneg[i, 1], rneg[i, 2])
            margins[i] = m
            if m <= 0.0:
                continue
            task_loss += m
            _accum_triple_nb(E, R, gE, gR, gW, w, t_bin, pos[i, 0], pos[i, 1], pos[i, 2], 2.0, u, p)
            _accum_triple_nb(E, R, gE, gR, gW, w, t_bin, eneg[i, 0], eneg[i, 1], eneg[i, 2], -1.0, u, p)
            if use_rel:
                _accum_triple_nb(
                    E, R, gE, gR, gW, w, t_bin, rneg[i, 0], rneg[i, 1], rneg[i, 2], -beta, u, p
                )
        return gE, gR, gW, task_loss, margins


# ---------------------------------------------------------------------------
# dispatch


def hinge_margins(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel):
    if BACKEND == "numba":
        return hinge_margins_numba(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel)
    return hinge_margins_numpy(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel)


def task_gradients(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel):
    if BACKEND == "numba":
        return task_gradients_numba(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel)
    return task_gradients_numpy(E, R, W, bins, pos, eneg, rneg, gamma, beta, use_rel)

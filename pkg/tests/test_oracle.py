"""Sanity checks for the brute-force references themselves."""

import numpy as np
import pytest

from rtge.model import triple_loss
from rtge.oracle import _loss_direct, brute_rank


def test_loss_direct_agrees_with_model_loss():
    rng = np.random.default_rng(0)
    for _ in range(100):
        E = rng.normal(size=(4, 6))
        R = rng.normal(size=(2, 6))
        W = rng.normal(size=(2, 6))
        h, z = rng.choice(4, size=2, replace=False)
        r, t = int(rng.integers(2)), int(rng.integers(2))
        direct = _loss_direct(E.tolist(), R.tolist(), W.tolist(), (h, r, z), t)
        assert direct == pytest.approx(triple_loss(E[h], R[r], E[z], W[t]), rel=1e-12)


def test_brute_rank_hand_cases():
    assert brute_rank([5.0, 1.0, 3.0], 1) == 1
    assert brute_rank([5.0, 1.0, 3.0], 0) == 3
    # two-way tie at the top averages to 1.5, rounded half up -> 2
    assert brute_rank([1.0, 1.0, 4.0], 0) == 2
    assert brute_rank([1.0, 1.0, 4.0], 1) == 2
    # five-way tie: mean of positions 1..5 is 3
    assert brute_rank([2.0] * 5, 2) == 3


def test_brute_rank_bounds():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 15))
        losses = rng.integers(0, 3, size=n).astype(float)
        gold = int(rng.integers(n))
        r = brute_rank(losses, gold)
        assert 1 <= r <= n

import numpy as np
import pytest

from lwr.losses import (
    HINGE_LOSS, SQUARED_LOSS, PredictionLossKind, meta_loss, meta_loss_batch, meta_loss_grid,
    optimal_rejection_score, prediction_loss,
)

EPS_LOSS = PredictionLossKind("epsilon_insensitive", 0.1)


@pytest.mark.parametrize("kind, h, y, l, dl", [
    (HINGE_LOSS, 0.5, 1.0, 0.5, -1.0),
    (SQUARED_LOSS, 1.7, 1.7, 0.0, 0.0),
    (EPS_LOSS, 2.0, 1.0, 0.9, 1.0),
    (HINGE_LOSS, 2.0, 1.0, 0.0, 0.0),
    (HINGE_LOSS, -0.5, -1.0, 0.5, 1.0),
    (SQUARED_LOSS, 3.0, 1.0, 4.0, 4.0),
    (EPS_LOSS, 0.5, 1.0, 0.4, -1.0),
    (EPS_LOSS, 1.05, 1.0, 0.0, 0.0),
])
def test_prediction_loss_examples(kind, h, y, l, dl):
    v = prediction_loss(kind, h, y)
    assert v.l == pytest.approx(l, abs=1e-15)
    assert v.dl_dh == dl


def test_kinks_take_flat_subgradient():
    assert prediction_loss(HINGE_LOSS, 1.0, 1.0).dl_dh == 0.0
    assert prediction_loss(PredictionLossKind("epsilon_insensitive", 0.5), 1.5, 1.0).dl_dh == 0.0


def test_hinge_rejects_non_binary_labels():
    with pytest.raises(ValueError, match="labels"):
        prediction_loss(HINGE_LOSS, 0.0, 0.5)


def test_unknown_loss():
    with pytest.raises(ValueError):
        PredictionLossKind("logistic")


@pytest.mark.parametrize("l, r, c, L, branch, dl, dr", [
    (1.0, -1.0, 2.0, 4.0, "reject", 0.0, -2.0),
    (0.5, 1.5, 2.0, 2.0, "accept", 1.0, 1.0),
    (3.0, 0.5, 2.0, 3.5, "accept", 1.0, 1.0),
    (0.0, 2.0, 2.0, 2.0, "accept", 1.0, 1.0),
    (0.0, -3.0, 0.5, 2.0, "reject", 0.0, -0.5),
])
def test_meta_loss_examples(l, r, c, L, branch, dl, dr):
    v = meta_loss(l, r, c)
    assert (v.L, v.active_branch, v.dL_dl, v.dL_dr) == (L, branch, dl, dr)


def test_meta_loss_optimum_example():
    v = meta_loss(0.0, 2.0 / 3.0, 2.0)
    assert v.L == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_meta_loss_ties_and_origin():
    # with l >= 0 and c > 0 the zero branch can never be the strict maximum
    v = meta_loss(0.0, 0.0, 1.0)
    assert v.active_branch == "reject" and v.L == 1.0
    tie = meta_loss(0.5, 0.5, 2.0)  # r + l = 1 = c (1 - r)
    assert tie.active_branch == "accept"


def test_meta_loss_argument_errors():
    with pytest.raises(ValueError, match="c must be > 0"):
        meta_loss(0.0, 0.0, 0.0)
    with pytest.raises(ValueError, match=">= 0"):
        meta_loss(-0.1, 0.0, 1.0)


def test_convexity_midpoint():
    g = np.random.default_rng(0)
    n = 10_000
    c = g.uniform(0.05, 5.0, n)
    l1, l2 = g.exponential(1.0, n), g.exponential(1.0, n)
    r1, r2 = g.normal(0, 2, n), g.normal(0, 2, n)
    lam = g.uniform(0, 1, n)
    for i in range(0, n, 1000):
        sl = slice(i, i + 1000)
        cc = c[i]
        lhs = meta_loss_batch(lam[sl] * l1[sl] + (1 - lam[sl]) * l2[sl], lam[sl] * r1[sl] + (1 - lam[sl]) * r2[sl], cc)[0]
        rhs = lam[sl] * meta_loss_batch(l1[sl], r1[sl], cc)[0] + (1 - lam[sl]) * meta_loss_batch(l2[sl], r2[sl], cc)[0]
        assert np.all(lhs <= rhs + 1e-12)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 4.0])
def test_per_example_optimum_grid_search(c):
    r = np.linspace(-2, 2, 400_001)
    L = meta_loss_batch(np.zeros_like(r), r, c)[0]
    j = int(np.argmin(L))
    assert abs(r[j] - c / (1 + c)) <= 1e-5
    assert abs(L[j] - c / (1 + c)) <= 1e-5
    assert optimal_rejection_score(c) == c / (1 + c)


def test_monotone_in_c_when_rejected():
    g = np.random.default_rng(1)
    l = g.uniform(0, 0.2, 500)
    r = -g.uniform(0, 2, 500)
    prev = meta_loss_batch(l, r, 0.1)[0]
    for c in (0.5, 1, 2, 5, 10):
        cur = meta_loss_batch(l, r, c)[0]
        assert np.all(cur >= prev)
        prev = cur


def test_subgradient_matches_finite_differences():
    g = np.random.default_rng(2)
    l = g.exponential(1.0, 2000)
    r = g.normal(0, 2, 2000)
    c = 1.5
    L, dl, dr, _ = meta_loss_batch(l, r, c)
    branches = np.stack([np.zeros_like(l), r + l, c * (1 - r)])
    top2 = np.sort(branches, axis=0)[-2:]
    clear = (top2[1] - top2[0]) > 1e-3
    h = 1e-7
    fd_l = (meta_loss_batch(l + h, r, c)[0] - meta_loss_batch(np.maximum(l - h, 0), r, c)[0]) / (
        (l + h) - np.maximum(l - h, 0))
    fd_r = (meta_loss_batch(l, r + h, c)[0] - meta_loss_batch(l, r - h, c)[0]) / (2 * h)
    np.testing.assert_allclose(dl[clear], fd_l[clear], atol=1e-6)
    np.testing.assert_allclose(dr[clear], fd_r[clear], atol=1e-6)


def test_grid_single_cell_and_nonnegative():
    grid, lv, rv = meta_loss_grid(2.0, (-2, 2, 101), (0, 4, 101))
    assert grid.shape == (101, 101)
    assert grid[0, 50] == 2.0  # l=0, r=0
    assert np.all(grid >= 0)


def test_grid_argmin():
    grid, lv, rv = meta_loss_grid(2.0)
    i, j = np.unravel_index(np.argmin(grid), grid.shape)
    assert lv[i] == 0.0
    assert abs(rv[j] - 2.0 / 3.0) <= rv[1] - rv[0]


def test_grid_axis_errors():
    with pytest.raises(ValueError):
        meta_loss_grid(2.0, (-2, 2, 1))
    with pytest.raises(ValueError):
        meta_loss_grid(2.0, l_range=(-1, 1, 5))

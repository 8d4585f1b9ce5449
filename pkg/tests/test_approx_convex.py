import numpy as np
import pytest

from colt.approx_convex import (
    Direction,
    SubgradientOracle,
    biconjugate_grid,
    check_approx_jensen,
    check_linearization,
    check_sandwich,
    combine,
    estimate_norm_bound,
    linearization_margin,
    subgrad_from_witness,
)
from colt.geometry import Box, Interval


def quadratic_oracle():
    return SubgradientOracle(
        eval=lambda x: float(x @ x),
        subgrad=lambda x: 2.0 * x,
        norm_bound=2.0 * np.sqrt(2.0),
    )


def single_edge_reward():
    # coverage probability of one edge, supergradient = half the degrees
    return SubgradientOracle(
        eval=lambda x: float(x[0] + x[1] - x[0] * x[1]),
        subgrad=lambda x: np.array([0.5, 0.5]),
        norm_bound=np.sqrt(0.5),
    )


def test_direction_validation():
    assert Direction.convex(1.0).alpha == 1.0
    assert Direction.concave(1.0).alpha == 1.0  # factor one admits both readings
    with pytest.raises(ValueError):
        Direction.convex(0.5)
    with pytest.raises(ValueError):
        Direction.concave(1.5)
    with pytest.raises(ValueError):
        Direction.concave(0.0)


def test_linearization_convex_quadratic_passes():
    rep = check_linearization(
        quadratic_oracle(), Direction.convex(1.0), Box.unit(2), num_pairs=2000, seed=0
    )
    assert rep.passed
    assert rep.samples_checked == 2000


def test_linearization_single_edge_reward_passes():
    rep = check_linearization(
        single_edge_reward(), Direction.concave(0.5), Box.unit(2), num_pairs=2000, seed=1
    )
    assert rep.passed


def test_linearization_zero_subgradient_fails():
    bad = SubgradientOracle(eval=lambda x: float(x @ x), subgrad=lambda x: np.zeros(2), norm_bound=0.0)
    # planted pair: x = (1,1), u = (0,0) violates by exactly 2
    planted = linearization_margin(
        bad, Direction.convex(1.0), np.array([1.0, 1.0]), np.zeros(2)
    )
    assert planted == pytest.approx(2.0)
    rep = check_linearization(bad, Direction.convex(1.0), Box.unit(2), num_pairs=500, seed=2)
    assert not rep.passed
    assert rep.worst_violation > 0


def test_jensen_ordinary_convex_passes():
    rep = check_approx_jensen(
        quadratic_oracle(), Direction.convex(1.0), Box.unit(2),
        num_trials=500, max_support=4, seed=0,
    )
    assert rep.passed


def test_jensen_edge_reward_passes():
    rep = check_approx_jensen(
        single_edge_reward(), Direction.concave(0.5), Box.unit(2),
        num_trials=500, max_support=3, seed=3,
    )
    assert rep.passed


def test_jensen_tent_bump_fails():
    tent = SubgradientOracle(
        eval=lambda x: float(min(x[0], 1.0 - x[0]) + 0.6),
        subgrad=lambda x: np.array([1.0 if x[0] < 0.5 else -1.0]),
        norm_bound=1.0,
    )
    # planted mixture: endpoints at equal weight give 1.1 > 0.6
    mix_val = tent.eval(np.array([0.5]))
    avg = 0.5 * tent.eval(np.array([0.0])) + 0.5 * tent.eval(np.array([1.0]))
    assert mix_val - avg == pytest.approx(0.5)
    rep = check_approx_jensen(
        tent, Direction.convex(1.0), Interval(0.0, 1.0),
        num_trials=1000, max_support=3, seed=0,
    )
    assert not rep.passed


def test_sandwich_identity_passes():
    f = lambda x: float(x @ x)
    g = f
    rep = check_sandwich(f, g, lambda x: 2.0 * x, 1.0, Box.unit(2), num_points=500, seed=0)
    assert rep.passed


def test_sandwich_wrong_factor_fails():
    f = lambda x: 2.0 * float(x @ x)
    g = lambda x: float(x @ x)
    # at x = 1: f - 1.5 g = 0.5
    rep = check_sandwich(
        f, g, lambda x: 2.0 * x, 1.5, Interval(0.0, 1.0), num_points=500, seed=0
    )
    assert not rep.passed
    assert rep.worst_violation > 0


def test_subgrad_from_witness_scaling():
    g_sub = lambda x: np.array([1.0, 0.0])
    same = subgrad_from_witness(lambda x: 1.0, g_sub, 1.0, g_norm_bound=1.0)
    np.testing.assert_allclose(same.subgrad(np.zeros(2)), [1.0, 0.0])
    doubled = subgrad_from_witness(lambda x: 1.0, g_sub, 2.0, g_norm_bound=1.0)
    np.testing.assert_allclose(doubled.subgrad(np.zeros(2)), [2.0, 0.0])
    assert doubled.norm_bound == pytest.approx(2.0)


def test_estimate_norm_bound_quadratic():
    # sup ||2x|| over the unit box is 2 sqrt(2)
    est = estimate_norm_bound(lambda x: 2.0 * x, Box.unit(2), num_samples=4000, seed=0)
    assert 0.95 * 2.0 * np.sqrt(2.0) <= est <= 2.0 * np.sqrt(2.0)


def test_combine_matches_direct_sum():
    q1 = quadratic_oracle()
    q2 = SubgradientOracle(
        eval=lambda x: float((x - 0.5) @ (x - 0.5)),
        subgrad=lambda x: 2.0 * (x - 0.5),
        norm_bound=np.sqrt(2.0),
    )
    comb = combine([q1, q2], [2.0, 3.0])
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.random(2)
        assert comb.eval(x) == pytest.approx(2 * q1.eval(x) + 3 * q2.eval(x))
        np.testing.assert_allclose(comb.subgrad(x), 2 * q1.subgrad(x) + 3 * q2.subgrad(x))
    assert comb.norm_bound == pytest.approx(2 * q1.norm_bound + 3 * q2.norm_bound)


def test_combine_single_and_zero_weights():
    q = quadratic_oracle()
    same = combine([q], [1.0])
    x = np.array([0.3, 0.7])
    assert same.eval(x) == q.eval(x)
    zero = combine([q, q], [0.0, 0.0])
    assert zero.eval(x) == 0.0
    np.testing.assert_allclose(zero.subgrad(x), np.zeros(2))
    rep = check_linearization(zero, Direction.convex(1.5), Box.unit(2), num_pairs=200, seed=0)
    assert rep.passed


def test_combine_rejects_negative_weights():
    with pytest.raises(ValueError):
        combine([quadratic_oracle()], [-0.1])


def test_combine_preserves_linearization():
    # random nonnegative combinations of two verified factor-1 oracles
    q1 = quadratic_oracle()
    q2 = SubgradientOracle(
        eval=lambda x: float(np.sum(x)), subgrad=lambda x: np.ones(2), norm_bound=np.sqrt(2.0)
    )
    rng = np.random.default_rng(5)
    for trial in range(20):
        w = rng.random(2) * 3.0
        comb = combine([q1, q2], w)
        rep = check_linearization(
            comb, Direction.convex(1.0), Box.unit(2), num_pairs=200, seed=trial
        )
        assert rep.passed


def test_gradient_matches_finite_differences():
    q = quadratic_oracle()
    rng = np.random.default_rng(9)
    h = 1e-6
    for _ in range(50):
        x = 0.2 + 0.6 * rng.random(2)  # interior points
        num = np.array(
            [
                (q.eval(x + h * e) - q.eval(x - h * e)) / (2 * h)
                for e in np.eye(2)
            ]
        )
        ana = q.subgrad(x)
        assert np.linalg.norm(num - ana) <= 1e-5 * max(1.0, np.linalg.norm(ana))


def test_biconjugate_recovers_convex_function():
    grid = biconjugate_grid(lambda x: float(x[0] ** 2), Interval(-1.0, 1.0), 1e-2)
    assert np.max(np.abs(grid.values - grid.points[:, 0] ** 2)) <= 0.02
    # never above the function (up to grid error)
    assert np.max(grid.values - grid.f_values) <= 0.02


def test_biconjugate_tent_collapses_to_chord():
    grid = biconjugate_grid(
        lambda x: float(min(x[0], 1.0 - x[0])), Interval(0.0, 1.0), 1e-2
    )
    assert np.max(np.abs(grid.values)) <= 0.02


def test_biconjugate_constant():
    grid = biconjugate_grid(lambda x: 3.5, Interval(0.0, 1.0), 1e-2)
    assert np.max(np.abs(grid.values - 3.5)) <= 0.02


def test_biconjugate_two_dimensional_box():
    grid = biconjugate_grid(lambda x: float(x @ x), Box.unit(2), 0.05)
    f_on_grid = np.array([p @ p for p in grid.points])
    assert np.max(np.abs(grid.values - f_on_grid)) <= 0.1


def test_biconjugate_rejects_high_dimension():
    with pytest.raises(ValueError):
        biconjugate_grid(lambda x: 0.0, Box.unit(3), 0.1)

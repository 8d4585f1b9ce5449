import math

import numpy as np
import pytest

from colt.bandit import (
    bandit_bounds,
    bandit_params,
    exploration_rate,
    ftrl_update,
    ips_estimate,
    learning_rate,
    mixed_sampling,
    run_bandit,
    stability_term,
    surrogate_loss,
)
from colt.full_info import PowerLaw
from colt.instances import gen_bandit


# ---------------------------------------------------------------------------
# grid oracles for the two simplex solves (K = 2)
# ---------------------------------------------------------------------------

def ftrl_objective(q1, L, eta, K=2):
    q = np.array([q1, 1.0 - q1])
    F = np.sum(-np.log(q) + np.log(1.0 / K))
    return F + eta * float(q @ L)


def ftrl_grid_oracle(L, eta, n=1_000_000):
    q1 = np.linspace(1e-9, 1.0 - 1e-9, n)
    q2 = 1.0 - q1
    obj = (-np.log(q1) - np.log(q2) + 2.0 * np.log(0.5)) + eta * (q1 * L[0] + q2 * L[1])
    i = int(np.argmin(obj))
    return q1[i], obj[i]


def stability_objective(q1, losses, p, eta):
    q = np.array([q1, 1.0 - q1])
    breg = np.sum(-np.log(q / p) + (q - p) / p)
    return float(losses @ (p - q)) - breg / eta


def stability_grid_oracle(losses, p, eta, n=1_000_000):
    q1 = np.linspace(1e-9, 1.0 - 1e-9, n)
    q2 = 1.0 - q1
    breg = (-np.log(q1 / p[0]) + (q1 - p[0]) / p[0]) + (
        -np.log(q2 / p[1]) + (q2 - p[1]) / p[1]
    )
    obj = losses[0] * (p[0] - q1) + losses[1] * (p[1] - q2) - breg / eta
    i = int(np.argmax(obj))
    return q1[i], obj[i]


# ---------------------------------------------------------------------------
# schedule
# ---------------------------------------------------------------------------

def test_bandit_params_hand_values():
    V, m, Q0 = bandit_params(2, 20, 0.0)
    assert m == pytest.approx(math.log(20))
    assert Q0 == pytest.approx(m)
    base = m * math.e * (18 * 2 * math.sqrt(20) * m * m)
    denom = 36 * 2 * math.sqrt(20) * m * m
    assert V == pytest.approx(base**m / denom, rel=1e-12)


def test_bandit_params_monotone_in_budget():
    v0 = bandit_params(3, 1000, 0.0)[0]
    v1 = bandit_params(3, 1000, 50.0)[0]
    v2 = bandit_params(3, 1000, 500.0)[0]
    assert v0 < v1 < v2


def test_bandit_params_overflow_audit():
    # the schedule fits in doubles at desk scale
    K, T, B = 5, 100_000, 1000.0
    m = math.log(T)
    base = m * math.e * (18 * K * math.sqrt(T) * m * m + B)
    denom = 36 * K * math.sqrt(T) * m * m
    log10_v = m * math.log10(base) - math.log10(denom)
    assert log10_v < 300
    V, _, _ = bandit_params(K, T, B)
    assert math.isfinite(V)
    assert math.log10(V) == pytest.approx(log10_v, abs=1e-6)


def test_bandit_params_validation():
    with pytest.raises(ValueError):
        bandit_params(2, 2, 0.0)
    with pytest.raises(ValueError):
        bandit_params(0, 100, 0.0)
    with pytest.raises(ValueError):
        bandit_params(2, 100, 0.0, variant="mystery")


def test_algline_variant_differs():
    vp = bandit_params(2, 500, 10.0, variant="proof")[0]
    va = bandit_params(2, 500, 10.0, variant="algline")[0]
    assert vp != va


# ---------------------------------------------------------------------------
# micro-operations
# ---------------------------------------------------------------------------

def test_exploration_rate():
    K = 4
    for t in range(1, 4 * K + 1):
        assert exploration_rate(t, K) == 0.5
    assert exploration_rate(64, 4) == pytest.approx(0.25)
    rates = [exploration_rate(t, 2) for t in range(1, 2000)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert rates[-1] < 0.04


def test_mixed_sampling():
    assert mixed_sampling([0.5, 0.5], 0.3, 2) == pytest.approx([0.5, 0.5])
    assert mixed_sampling([0.9, 0.1], 0.0, 2) == pytest.approx([0.9, 0.1])
    assert mixed_sampling([1.0, 0.0], 0.5, 2) == pytest.approx([0.75, 0.25])


def test_ips_estimate_examples():
    assert ips_estimate(1.0, 0, [0.5, 0.5], 2) == pytest.approx([2.0, 0.0])
    assert ips_estimate(0.0, 1, [0.5, 0.5], 2) == pytest.approx([0.0, 0.0])


def test_ips_unbiased_by_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(20):
        K = int(rng.integers(2, 6))
        loss_vec = rng.random(K)
        p = rng.dirichlet(np.ones(K))
        p_mix = mixed_sampling(p, 0.2, K)
        expect = np.zeros(K)
        for arm in range(K):
            expect += p_mix[arm] * np.asarray(ips_estimate(loss_vec[arm], arm, p_mix, K))
        np.testing.assert_allclose(expect, loss_vec, atol=1e-12)


def test_learning_rate():
    assert learning_rate(3, 0.0) == 3.0
    assert learning_rate(3, 2.0) == pytest.approx(1.0)
    vals = [learning_rate(3, s) for s in np.linspace(0, 10, 30)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_surrogate_loss_values():
    lyap = PowerLaw(3.0)
    assert surrogate_loss(0.7, 0.0, 5.0, lyap, 4.0) == pytest.approx(3.5)
    m = 3.0
    val = surrogate_loss(0.0, 1.0, 5.0, PowerLaw(m), m)
    assert val == pytest.approx(math.e * m * m ** (m - 1.0))
    assert val == pytest.approx(math.e * m**m)


def test_surrogate_magnitude_under_schedule():
    # worst-case surrogate stays under the run-level cap V + e Phi'(Q(T))
    K, T, B = 3, 100, 5.0
    V, m, _ = bandit_params(K, T, B)
    cap_run = V + math.e * m * (T + m) ** (m - 1.0)
    worst = surrogate_loss(1.0, 1.0, V, PowerLaw(m), T + m)
    assert worst <= cap_run
    # the closed-form ceiling (e^2 T ln T)^{ln T} dominates once
    # 18 K sqrt(T) (ln T)^2 <= e T; check it in that regime
    K, T, B = 1, 4_000_000, 1000.0
    V, m, _ = bandit_params(K, T, B)
    assert 18 * K * math.sqrt(T) * m * m <= math.e * T
    cap_run = V + math.e * m * (T + m) ** m
    cap_closed = math.exp(m * math.log(math.e**2 * T * m))
    assert cap_run <= cap_closed


def test_stability_zero_losses():
    assert stability_term([0.0, 0.0], [0.4, 0.6], 2.0) == 0.0


def test_stability_matches_grid_oracle():
    cases = [
        (np.array([3.0, 0.0]), np.array([0.5, 0.5]), 2.0),
        (np.array([0.0, 11.0]), np.array([0.8, 0.2]), 0.7),
        (np.array([40.0, 0.0]), np.array([0.25, 0.75]), 1.0),
        (np.array([2.5, 1.5]), np.array([0.6, 0.4]), 5.0),
    ]
    for losses, p, eta in cases:
        mine = stability_term(losses, p, eta)
        _, oracle_val = stability_grid_oracle(losses, p, eta)
        assert mine == pytest.approx(oracle_val, abs=1e-8)
        assert mine >= 0.0


def test_stability_monotone_in_eta():
    rng = np.random.default_rng(3)
    for _ in range(20):
        losses = rng.random(3) * 5.0
        p = rng.dirichlet(np.ones(3))
        m1 = stability_term(losses, p, 0.5)
        m2 = stability_term(losses, p, 2.0)
        assert m2 >= m1 - 1e-10


def test_ftrl_zero_and_shifted_losses_uniform():
    np.testing.assert_allclose(ftrl_update([0.0, 0.0, 0.0], 1.0, 3), np.full(3, 1 / 3), atol=1e-9)
    np.testing.assert_allclose(ftrl_update([7.0, 7.0, 7.0], 0.3, 3), np.full(3, 1 / 3), atol=1e-9)


def test_ftrl_matches_grid_oracle():
    cases = [
        (np.array([1.0, 0.0]), 1.0),
        (np.array([10.0, 2.0]), 0.25),
        (np.array([0.0, 30.0]), 3.0),
    ]
    for L, eta in cases:
        q = ftrl_update(L, eta, 2)
        _, oracle_obj = ftrl_grid_oracle(L, eta)
        mine_obj = ftrl_objective(q[0], L, eta)
        assert mine_obj == pytest.approx(oracle_obj, abs=1e-8)
        assert q.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(q > 0)


def test_ftrl_prefers_small_losses():
    q = ftrl_update([5.0, 0.0], 1.0, 2)
    assert q[1] > q[0]


def test_ftrl_validation():
    with pytest.raises(ValueError):
        ftrl_update([1.0, 2.0], 0.0, 2)
    with pytest.raises(ValueError):
        ftrl_update([1.0], 1.0, 2)


def test_power_law_derivative_unit_step_growth():
    # derivative grows by at most a factor e per unit step above the floor
    rng = np.random.default_rng(11)
    for T in (10, 100, 10_000):
        m = math.log(T)
        Q = m + rng.random(2000) * 5.0 * T
        lhs = m * (Q + 1.0) ** (m - 1.0)
        rhs = math.e * m * Q ** (m - 1.0)
        assert np.all(lhs <= rhs * (1 + 1e-12))


# ---------------------------------------------------------------------------
# end-to-end runs
# ---------------------------------------------------------------------------

def test_single_arm_run():
    tr = gen_bandit(1, 50, B_T=5.0, seed=0)
    rep = run_bandit(tr, seed=1)
    assert np.all(rep.arms == 0)
    q0 = rep.terminal["Q0"]
    assert rep.queue[-1, 0] == pytest.approx(q0 + rep.consumptions.sum())


def test_all_zero_losses_keep_uniform_play():
    tr = gen_bandit(3, 200, B_T=10.0, seed=0)
    tr.payload["loss"][:] = 0.0
    tr.payload["cons"][:] = 0.0
    rep = run_bandit(tr, seed=2)
    # no feedback signal: estimates are zero, learning rate stays at K
    assert np.all(rep.est_loss_norm == 0.0)
    assert np.all(rep.eta == 3.0)
    counts = np.bincount(rep.arms, minlength=3)
    assert counts.min() > 25


def test_three_round_wiring_matches_unrolled_recomputation():
    T, K = 3, 2
    tr = gen_bandit(K, T, B_T=2.0, seed=6)
    loss, cons = tr.payload["loss"], tr.payload["cons"]
    rep = run_bandit(tr, seed=9)

    V, m, Q0 = bandit_params(K, T, tr.budget)
    lyap = PowerLaw(m)
    uniforms = np.random.Generator(np.random.Philox(key=9)).random(T)
    p = [1.0 / K] * K
    cum = [0.0] * K
    eta_prev, gamma_prev = float(K), 0.5
    stab = 0.0
    Q = Q0
    for t in range(1, T + 1):
        mix = mixed_sampling(p, gamma_prev, K)
        u = uniforms[t - 1]
        acc = 0.0
        arm = K - 1
        for j in range(K):
            acc += mix[j]
            if u < acc:
                arm = j
                break
        assert rep.arms[t - 1] == arm
        assert rep.gamma[t - 1] == gamma_prev
        l, c = loss[t - 1][arm], cons[t - 1][arm]
        surr = surrogate_loss(l, c, V, lyap, Q)
        assert rep.surrogate[t - 1] == surr
        Q += c
        assert rep.queue[t - 1, 0] == Q
        est = ips_estimate(surr, arm, mix, K)
        assert rep.est_loss_norm[t - 1] == abs(est[arm])
        stab += stability_term(est, p, eta_prev)
        gamma_prev = exploration_rate(t, K)
        eta_prev = learning_rate(K, stab)
        assert rep.eta[t - 1] == eta_prev
        for j in range(K):
            cum[j] += est[j]
        p = list(ftrl_update(cum, eta_prev, K))


def test_run_rejects_out_of_range_losses():
    tr = gen_bandit(2, 10, seed=0)
    tr.payload["loss"][0, 0] = 1.5
    with pytest.raises(ValueError):
        run_bandit(tr, seed=0)


def test_run_is_deterministic_per_seed():
    tr = gen_bandit(2, 300, seed=1)
    r1 = run_bandit(tr, seed=5)
    r2 = run_bandit(tr, seed=5)
    np.testing.assert_array_equal(r1.arms, r2.arms)
    np.testing.assert_array_equal(r1.eta, r2.eta)
    r3 = run_bandit(tr, seed=6)
    assert not np.array_equal(r1.arms, r3.arms)


def test_exploration_floor_on_sampling():
    tr = gen_bandit(3, 400, seed=2)
    rep = run_bandit(tr, seed=3)
    # re-derive the sampling floor gamma/K from the recorded exploration rates
    assert np.all(rep.gamma >= exploration_rate(400, 3) - 1e-15)


def test_loss_scale_recorded_and_preserves_q():
    tr = gen_bandit(2, 200, seed=4)
    r1 = run_bandit(tr, seed=7, loss_scale=1.0)
    r2 = run_bandit(tr, seed=7, loss_scale=1e6)
    assert r2.meta["loss_scale"] == 1e6
    # raw surrogates and the consumption ledger are scale-independent
    assert r1.surrogate[0] == r2.surrogate[0]


def test_bounds_shape():
    b = bandit_bounds(2, 10_000, 100.0)
    lt = math.log(10_000)
    assert b["regret_bound"] == pytest.approx(54 * 2 * 100 * lt * lt)
    assert b["cc_bound"] == pytest.approx(math.e**2 * (18 * 2 * 100 * lt**3 + 100 * lt))


def test_empirical_sublinearity_ratio():
    # quadrupling the horizon should well less than triple the mean regret
    from colt.oracle import best_fixed_feasible, regret_alpha

    means = {}
    for T in (2500, 10_000):
        tr = gen_bandit(2, T, B_T=math.sqrt(T), seed=0)
        bench = best_fixed_feasible(tr)
        regs = [
            regret_alpha(run_bandit(tr, seed=s), bench, tr.alpha, tr.direction)
            for s in range(20)
        ]
        means[T] = float(np.mean(regs))
    assert means[10_000] / means[2500] <= 3.0

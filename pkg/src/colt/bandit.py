"""Bandit-feedback learner for budgeted K-armed play.

The outer loop forms a surrogate loss for the pulled arm from the observed
loss and consumption,

    surrogate = V * loss + e * Phi'(Q(t-1)) * consumption,

with a power-law budget potential Phi(q) = q^m, m = ln T, Q(0) = ln T. The
potential derivative is evaluated at the pre-round counter so the surrogate
never depends on the current round's draw, which keeps importance-weighted
estimation valid. The inner algorithm is a scale-free adversarial bandit:
log-barrier FTRL over the simplex with inverse-propensity estimates, an
exploration mixture gamma_t = min(1/2, sqrt(K/t)), and the adaptive learning
rate eta_t = K / (1 + sum of per-round stability terms).

Both simplex solves (the FTRL step and the stability term) reduce to the
stationarity system q_j = 1 / (a nu + c_j) with a scalar nu fixed by
sum_j q_j = 1, solved by safeguarded Newton bisection to 1e-12 on the
simplex constraint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .full_info import PowerLaw, trace_id
from .instances import InstanceTrace
from .reports import RunReport

LOG10_SCHEDULE_LIMIT = 300.0  # abort configuration beyond double range
SIMPLEX_TOL = 1e-12


@dataclass
class BanditState:
    """Mutable state of one bandit run."""

    p: list[float]  # FTRL iterate over arms
    p_mixed: list[float]  # exploration-mixed sampling distribution
    cum_est_loss: list[float]
    eta: float  # current learning rate
    gamma: float  # exploration rate used for the next sampling step
    stability_sum: float
    Q: float  # cumulative consumption, starts at ln T
    m: float  # power-law exponent, = ln T
    V: float
    t: int = 0


def bandit_params(K: int, T: int, B_T: float, variant: str = "proof") -> tuple[float, float, float]:
    """Schedule (V, m, Q0) for horizon T with K arms and budget B_T.

    m = Q0 = ln T. The default penalty weight is

        V = (m e (18 K sqrt(T) (ln T)^2 + B_T))^m / (36 K sqrt(T) (ln T)^2);

    variant="algline" selects the alternative
    (e (18 K sqrt(T) (ln T)^3 + B_T ln T))^{ln T} / (36 K sqrt(T) (ln T)^2).
    Configuration aborts if the schedule leaves double precision.
    """
    if K < 1:
        raise ValueError("need at least one arm")
    if T <= 2:
        raise ValueError("horizon must be >= 3 so the power-law exponent exceeds 1")
    if B_T < 0:
        raise ValueError("budget must be nonnegative")
    m = math.log(T)
    denom = 36.0 * K * math.sqrt(T) * m * m
    if variant == "proof":
        base = m * math.e * (18.0 * K * math.sqrt(T) * m * m + B_T)
    elif variant == "algline":
        base = math.e * (18.0 * K * math.sqrt(T) * m ** 3 + B_T * m)
    else:
        raise ValueError(f"unknown schedule variant {variant!r}")
    log10_v = m * math.log10(base) - math.log10(denom)
    if log10_v > LOG10_SCHEDULE_LIMIT:
        raise ValueError(
            f"penalty weight overflows double precision: log10 V = {log10_v:.1f}"
        )
    V = math.exp(m * math.log(base) - math.log(denom))
    return V, m, m


def bandit_bounds(K: int, T: int, B_T: float) -> dict[str, float]:
    """Worst-case expected regret / consumption guarantees for the schedule."""
    lt = math.log(T)
    return {
        "regret_bound": 54.0 * K * math.sqrt(T) * lt * lt,
        "cc_bound": math.e ** 2 * (18.0 * K * math.sqrt(T) * lt ** 3 + B_T * lt),
    }


def exploration_rate(t: int, K: int) -> float:
    """gamma_t = min(1/2, sqrt(K/t))."""
    if t < 1:
        raise ValueError("round index must be >= 1")
    return min(0.5, math.sqrt(K / t))


def mixed_sampling(p, gamma: float, K: int):
    """(1 - gamma) p + gamma / K per coordinate."""
    return [(1.0 - gamma) * float(v) + gamma / K for v in p]


def ips_estimate(observed_loss: float, arm: int, p_mixed, K: int) -> list[float]:
    """Inverse-propensity estimate: observed / sampling probability at the arm."""
    prob = float(p_mixed[arm])
    if prob <= 0.0:
        raise ArithmeticError("sampled an arm with zero probability")
    est = [0.0] * K
    est[arm] = float(observed_loss) / prob
    return est


def learning_rate(K: int, stability_sum: float) -> float:
    """eta_t = K / (1 + accumulated stability terms)."""
    if stability_sum < 0:
        raise ValueError("stability sum must be nonnegative")
    return K / (1.0 + stability_sum)


def surrogate_loss(loss: float, consumption: float, V: float, lyapunov: PowerLaw, Q_prev: float) -> float:
    """V * loss + e * Phi'(Q_prev) * consumption with the power-law potential."""
    return V * float(loss) + math.e * lyapunov.derivative(float(Q_prev)) * float(consumption)


def _solve_stationarity(c: list[float], a: float, tol: float = SIMPLEX_TOL) -> tuple[float, list[float]]:
    """Solve sum_j 1/(a nu + c_j) = 1 with all denominators positive.

    The root satisfies a nu + min(c) >= 1 (no coordinate may exceed one), so
    [(1 - min c)/a, (K - min c)/a] brackets it; safeguarded Newton bisection
    refines to `tol` on the simplex constraint.
    """
    K = len(c)
    cmin = min(c)

    def s_and_deriv(nu):
        s = 0.0
        ds = 0.0
        for cj in c:
            denom = a * nu + cj
            q = 1.0 / denom
            s += q
            ds -= a * q * q
        return s - 1.0, ds

    lo = (1.0 - cmin) / a
    hi = (K - cmin) / a
    nu_min = -cmin / a
    f_lo, _ = s_and_deriv(lo)
    for _ in range(200):  # guard against rounding at the analytic endpoints
        if f_lo >= 0.0:
            break
        lo = nu_min + 0.5 * (lo - nu_min)
        f_lo, _ = s_and_deriv(lo)
    f_hi, _ = s_and_deriv(hi)
    for _ in range(200):
        if f_hi <= 0.0:
            break
        hi = nu_min + 2.0 * (hi - nu_min)
        f_hi, _ = s_and_deriv(hi)
    if not (f_lo >= 0.0 >= f_hi):
        raise ArithmeticError(
            f"stationarity bracket failed: f(lo)={f_lo:.3e}, f(hi)={f_hi:.3e}, "
            f"a={a:.3e}, cmin={cmin:.3e}"
        )

    nu = lo if abs(f_lo) < abs(f_hi) else hi
    f, df = s_and_deriv(nu)
    for _ in range(200):
        if abs(f) <= tol:
            break
        step_ok = df < 0.0 and math.isfinite(df)
        nu_newton = nu - f / df if step_ok else None
        if nu_newton is not None and lo < nu_newton < hi:
            nu_next = nu_newton
        else:
            nu_next = 0.5 * (lo + hi)
        f_next, df = s_and_deriv(nu_next)
        if f_next > 0.0:
            lo = nu_next
        else:
            hi = nu_next
        nu, f = nu_next, f_next
        if hi - lo <= 8.0 * math.ulp(max(abs(lo), abs(hi))):
            break  # interval exhausted at double resolution
    q = [1.0 / (a * nu + cj) for cj in c]
    total = sum(q)
    q = [v / total for v in q]
    return nu, q


def ftrl_update(cum_est_loss, eta: float, K: int) -> np.ndarray:
    """Next iterate: argmin over the simplex of the log-barrier FTRL objective.

    Stationarity gives q_j = 1 / (eta L_j + nu) with nu normalizing the sum.
    """
    if eta <= 0:
        raise ValueError("learning rate must be positive")
    L = [float(v) for v in cum_est_loss]
    if len(L) != K:
        raise ValueError("cumulative loss vector must have K entries")
    if K == 1:
        return np.array([1.0])
    c = [eta * v for v in L]
    _, q = _solve_stationarity(c, 1.0)
    return np.asarray(q)


def _log_barrier_bregman(q: list[float], p: list[float]) -> float:
    return sum(
        -math.log(qj / pj) + (qj - pj) / pj for qj, pj in zip(q, p)
    )


def stability_term(est_loss, p, eta: float) -> float:
    """Movement allowance sup_q [ est_loss . (p - q) - Bregman(q, p) / eta ].

    Solved through the stationarity system q_j = 1/(eta (l_j + nu) + 1/p_j);
    the optimum value is nonnegative (q = p is feasible with value zero).
    """
    if eta <= 0:
        raise ValueError("learning rate must be positive")
    l = [float(v) for v in est_loss]
    pp = [float(v) for v in p]
    if min(pp) <= 0.0:
        raise ValueError("iterate must be interior to the simplex")
    if all(v == 0.0 for v in l):
        return 0.0
    if len(l) == 1:
        return 0.0
    c = [eta * lj + 1.0 / pj for lj, pj in zip(l, pp)]
    _, q = _solve_stationarity(c, eta)
    linear = sum(lj * (pj - qj) for lj, pj, qj in zip(l, pp, q))
    val = linear - _log_barrier_bregman(q, pp) / eta
    return max(val, 0.0)


def run_bandit(
    trace: InstanceTrace,
    seed: int = 0,
    variant: str = "proof",
    loss_scale: float = 1.0,
    params: tuple[float, float, float] | None = None,
) -> RunReport:
    """Play a K-armed linear trace under bandit feedback.

    The trace must carry per-round loss and consumption vectors in [0,1]^K
    (payload arrays "loss" and "cons"). Arm draws come from a counter-based
    generator keyed by `seed`, so round t's draw is reproducible in
    isolation. `loss_scale` divides the surrogate before it reaches the
    inner bandit (recorded in meta; the raw surrogate is what the report
    stores).
    """
    if "loss" not in trace.payload or "cons" not in trace.payload:
        raise ValueError("trace lacks K-armed loss/consumption structure")
    loss = np.asarray(trace.payload["loss"], dtype=float)
    cons = np.asarray(trace.payload["cons"], dtype=float)
    if np.any(loss < 0) or np.any(loss > 1) or np.any(cons < 0) or np.any(cons > 1):
        raise ValueError("losses and consumptions must lie in [0, 1]")
    if loss_scale <= 0:
        raise ValueError("loss_scale must be positive")
    T, K = loss.shape
    if params is None:
        V, m, Q0 = bandit_params(K, T, trace.budget, variant=variant)
    else:
        V, m, Q0 = params
    lyap = PowerLaw(m)

    uniforms = np.random.Generator(np.random.Philox(key=seed)).random(T)
    loss_rows = loss.tolist()
    cons_rows = cons.tolist()

    state = BanditState(
        p=[1.0 / K] * K,
        p_mixed=[1.0 / K] * K,
        cum_est_loss=[0.0] * K,
        eta=float(K),
        gamma=0.5,
        stability_sum=0.0,
        Q=Q0,
        m=m,
        V=V,
    )

    arms = np.zeros(T, dtype=int)
    costs = np.zeros(T)
    consumed = np.zeros((T, 1))
    queue = np.zeros((T, 1))
    etas = np.zeros(T)
    gammas = np.zeros(T)
    est_norms = np.zeros(T)
    surrogates = np.zeros(T)

    for t in range(1, T + 1):
        gamma_sample = state.gamma
        mix = mixed_sampling(state.p, gamma_sample, K)
        state.p_mixed = mix
        u = uniforms[t - 1]
        acc = 0.0
        arm = K - 1
        for j in range(K):
            acc += mix[j]
            if u < acc:
                arm = j
                break
        l_t = loss_rows[t - 1][arm]
        c_t = cons_rows[t - 1][arm]
        surr = surrogate_loss(l_t, c_t, V, lyap, state.Q)
        state.Q += c_t

        est = ips_estimate(surr / loss_scale, arm, mix, K)
        M = stability_term(est, state.p, state.eta)
        state.stability_sum += M
        state.gamma = exploration_rate(t, K)
        state.eta = learning_rate(K, state.stability_sum)
        for j in range(K):
            state.cum_est_loss[j] += est[j]
        state.p = list(ftrl_update(state.cum_est_loss, state.eta, K))
        state.t = t

        idx = t - 1
        arms[idx] = arm
        costs[idx] = l_t
        consumed[idx, 0] = c_t
        queue[idx, 0] = state.Q
        etas[idx] = state.eta
        gammas[idx] = gamma_sample
        est_norms[idx] = abs(est[arm])
        surrogates[idx] = surr

    return RunReport(
        kind="bandit",
        horizon=T,
        num_resources=1,
        actions=arms,
        costs=costs,
        consumptions=consumed,
        queue=queue,
        eta=etas,
        gamma=gammas,
        arms=arms,
        est_loss_norm=est_norms,
        surrogate=surrogates,
        terminal={
            "total_cost": float(costs.sum()),
            "cc_0": float(consumed.sum()),
            "Q_final_0": float(queue[-1, 0]),
            "Q0": Q0,
            "max_surrogate": float(surrogates.max()) if T else 0.0,
        },
        meta={
            "trace_id": trace_id(trace),
            "alpha": trace.alpha,
            "direction": trace.direction.kind,
            "V": V,
            "m": m,
            "K": K,
            "T": T,
            "B_T": trace.budget,
            "seed": seed,
            "variant": variant,
            "loss_scale": loss_scale,
            "k": 1,
        },
    )

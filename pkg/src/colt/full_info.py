"""Full-information learner: drift-plus-penalty surrogate with AdaGrad steps.

Per round the learner plays x_t, observes the cost and consumption oracles,
updates the per-resource budget counters Q_i, and descends the surrogate
subgradient

    H_t = V * H_cost(x_t) + sum_i Phi'(Q_i(t)) * H_cons_i(x_t)

with the scale-adaptive step size eta_t = sqrt(2) D / (2 sqrt(sum_{s<=t}
||H_s||^2)). The budget potential Phi is exponential by default, with the
schedule (lambda, V) that balances regret against consumption at horizon T.

Reward-oriented (concave) traces run through the same loop with the cost
subgradient negated, so the learner ascends the supergradient; rewards are
recorded as-is and regret is measured as alpha * OPT - total reward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import DecisionSet
from .instances import InstanceTrace
from .reports import RunReport

EXP_OVERFLOW_LIMIT = 700.0  # exp argument beyond which doubles overflow


@dataclass(frozen=True)
class Exponential:
    """Budget potential e^{lam * q}; derivative lam * e^{lam * q}."""

    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("exponential rate must be positive")

    def value(self, q: float) -> float:
        return math.exp(self.lam * q)

    def derivative(self, q: float) -> float:
        return self.lam * math.exp(self.lam * q)


@dataclass(frozen=True)
class PowerLaw:
    """Budget potential q^m for q >= 0, m >= 1; derivative m * q^{m-1}."""

    m: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("power-law exponent must be >= 1")

    def value(self, q: float) -> float:
        return q ** self.m

    def derivative(self, q: float) -> float:
        return self.m * q ** (self.m - 1.0)


def penalty_schedule(alpha: float, G: float, D: float, T: int, B_T: float) -> tuple[float, float]:
    """Schedule (lambda, V) balancing regret and consumption at horizon T.

    lambda = 1 / (2 (alpha G D sqrt(2T) + alpha B_T)),  V = 1 / (alpha G D).
    """
    if alpha <= 0 or G <= 0 or D <= 0 or T <= 0:
        raise ValueError("alpha, G, D, T must be positive")
    if B_T < 0:
        raise ValueError("budget must be nonnegative")
    lam = 1.0 / (2.0 * (alpha * G * D * math.sqrt(2.0 * T) + alpha * B_T))
    V = 1.0 / (alpha * G * D)
    return lam, V


def schedule_guarantees(
    alpha: float, G: float, D: float, T: int, B_T: float, F: float, k: int = 1
) -> dict[str, float]:
    """Closed-form regret / per-resource consumption guarantees for the schedule."""
    lam, _ = penalty_schedule(alpha, G, D, T, B_T)
    regret = alpha * G * D * math.sqrt(2.0 * T) + 0.5 * alpha * G * D * k
    cc = (1.0 / lam) * math.log(
        2.0 * (1.0 + F * T / (G * D) + math.sqrt(2.0 * T))
    )
    return {"regret_bound": regret, "cc_bound": cc, "lam": lam}


def surrogate_subgrad(
    H_f: np.ndarray,
    H_g: list[np.ndarray],
    V: float,
    phi_prime: list[float],
) -> np.ndarray:
    """V * H_f + sum_i phi_prime[i] * H_g[i]."""
    if len(H_g) != len(phi_prime):
        raise ValueError("one derivative weight per consumption subgradient required")
    H_f = np.asarray(H_f, dtype=float)
    out = V * H_f
    for w, h in zip(phi_prime, H_g):
        if w < 0:
            raise ValueError("potential derivatives must be nonnegative")
        h = np.asarray(h, dtype=float)
        if h.shape != H_f.shape:
            raise ValueError("subgradient dimensions do not match")
        out = out + w * h
    return out


@dataclass
class FullInfoState:
    """Mutable learner state across rounds."""

    x: np.ndarray
    Q: np.ndarray  # per-resource consumed budget
    grad_sq_sum: float
    V: float
    lyapunov: Exponential | PowerLaw
    t: int = 0
    eta: float = 0.0


def adagrad_step(state: FullInfoState, H: np.ndarray, dset: DecisionSet, D: float) -> np.ndarray:
    """Accumulate ||H||^2, apply the adaptive step, and project back.

    The step size is sqrt(2) D / (2 sqrt(accumulated squared norms)), zero
    while no nonzero gradient has been seen.
    """
    H = np.asarray(H, dtype=float)
    state.grad_sq_sum += float(H @ H)
    if state.grad_sq_sum > 0.0:
        state.eta = math.sqrt(2.0) * D / (2.0 * math.sqrt(state.grad_sq_sum))
    else:
        state.eta = 0.0
    state.x = dset.project(state.x - state.eta * H)
    return state.x


def run_full_info(
    trace: InstanceTrace,
    params: tuple[float, float] | None = None,
    lyapunov: Exponential | PowerLaw | None = None,
    x0: np.ndarray | None = None,
) -> RunReport:
    """Play the whole trace and return the per-round trajectory report.

    `params` is (lambda, V); omitted, the horizon schedule is derived from
    trace metadata. The budget potential defaults to Exponential(lambda).
    Aborts if an oracle evaluation fails or the exponential potential leaves
    double range.
    """
    T, k, d = trace.horizon, trace.num_resources, trace.dset.dim
    D = trace.dset.diameter()
    if params is None:
        lam, V = penalty_schedule(trace.alpha, trace.G, D, T, trace.budget)
    else:
        lam, V = float(params[0]), float(params[1])
    lyap = lyapunov if lyapunov is not None else Exponential(lam)
    sign = 1.0 if trace.direction.is_convex else -1.0

    state = FullInfoState(
        x=np.asarray(x0, dtype=float) if x0 is not None else trace.dset.center(),
        Q=np.zeros(k),
        grad_sq_sum=0.0,
        V=V,
        lyapunov=lyap,
    )

    actions = np.zeros((T, d))
    costs = np.zeros(T)
    cons = np.zeros((T, k))
    queue = np.zeros((T, k))
    etas = np.zeros(T)

    for t in range(T):
        rd = trace.rounds[t]
        x = state.x
        actions[t] = x
        try:
            costs[t] = rd.cost.eval(x)
            for i, g in enumerate(rd.consumptions):
                cons[t, i] = g.eval(x)
            H_f = np.asarray(rd.cost.subgrad(x), dtype=float)
            H_g = [np.asarray(g.subgrad(x), dtype=float) for g in rd.consumptions]
        except Exception as exc:  # noqa: BLE001 - abort with the round index
            raise RuntimeError(f"oracle evaluation failed at round {t + 1}") from exc

        state.Q += cons[t]
        queue[t] = state.Q
        if isinstance(lyap, Exponential):
            worst = lyap.lam * float(state.Q.max())
            if worst > EXP_OVERFLOW_LIMIT:
                raise ArithmeticError(
                    f"budget potential overflow at round {t + 1}: lam*Q = {worst:.3g}"
                )
        phi_prime = [lyap.derivative(float(q)) for q in state.Q]
        H = surrogate_subgrad(sign * H_f, H_g, V, phi_prime)
        adagrad_step(state, H, trace.dset, D)
        etas[t] = state.eta
        state.t = t + 1

    report = RunReport(
        kind="full_info",
        horizon=T,
        num_resources=k,
        actions=actions,
        costs=costs,
        consumptions=cons,
        queue=queue,
        eta=etas,
        terminal={
            "total_cost": float(costs.sum()),
            **{f"cc_{i}": float(cons[:, i].sum()) for i in range(k)},
            **{f"Q_final_{i}": float(queue[-1, i]) for i in range(k)},
        },
        meta={
            "trace_id": trace_id(trace),
            "alpha": trace.alpha,
            "direction": trace.direction.kind,
            "lam": lam,
            "V": V,
            "G": trace.G,
            "F": trace.F,
            "D": D,
            "T": T,
            "B_T": trace.budget,
            "seed": trace.seed,
            "k": k,
        },
    )
    return report


def run_olo(
    loss_vectors: np.ndarray, dset: DecisionSet, x0: np.ndarray | None = None
) -> RunReport:
    """Plain adaptive online linear optimization, no budget term.

    Each row of loss_vectors is the linear cost revealed after the play;
    regret against any fixed comparator is at most sqrt(2) D times the root
    of the accumulated squared gradient norms.
    """
    loss_vectors = np.asarray(loss_vectors, dtype=float)
    T, d = loss_vectors.shape
    D = dset.diameter()
    state = FullInfoState(
        x=np.asarray(x0, dtype=float) if x0 is not None else dset.center(),
        Q=np.zeros(1),
        grad_sq_sum=0.0,
        V=1.0,
        lyapunov=Exponential(1.0),
    )
    actions = np.zeros((T, d))
    costs = np.zeros(T)
    etas = np.zeros(T)
    for t in range(T):
        actions[t] = state.x
        costs[t] = float(loss_vectors[t] @ state.x)
        adagrad_step(state, loss_vectors[t], dset, D)
        etas[t] = state.eta
    grad_sq = float(np.sum(loss_vectors * loss_vectors))
    return RunReport(
        kind="olo",
        horizon=T,
        num_resources=1,
        actions=actions,
        costs=costs,
        consumptions=np.zeros((T, 1)),
        queue=np.zeros((T, 1)),
        eta=etas,
        terminal={
            "total_cost": float(costs.sum()),
            "cc_0": 0.0,
            "grad_sq_sum": grad_sq,
            "regret_bound": math.sqrt(2.0) * D * math.sqrt(grad_sq),
        },
        meta={"D": D, "T": T},
    )


def trace_id(trace: InstanceTrace) -> str:
    return (
        f"{trace.family}:T{trace.horizon}:seed{trace.seed}:"
        f"B{format(trace.budget, '.17g')}"
    )

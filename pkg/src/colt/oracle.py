"""Offline benchmarks and performance metrics.

best_fixed_feasible computes the optimal fixed action subject to the
long-term budget: closed forms for linear traces, an exact two-support
enumeration for the K-armed simplex program, a breakpoint scan for the
phased lower-bound family, and a feasible grid search with projected
gradient polish for the nonconvex coverage objective (dimension <= 3).
The regret, cumulative consumption, and competitive-factor metrics measured
against those benchmarks live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Box, grid_points
from .instances import InstanceTrace
from .reports import RunReport

FEAS_TOL = 1e-9


class InfeasibleInstanceError(ValueError):
    """No fixed action satisfies the long-term budget."""


class UnsupportedBenchmarkError(ValueError):
    """No exact or grid method covers this trace; supply a benchmark."""


@dataclass(frozen=True)
class BenchmarkResult:
    x_star: np.ndarray
    opt_value: float
    feasibility_slack: np.ndarray  # B_T - total consumption, per resource
    method: str  # closed-form | grid | multi-start
    meta: dict = field(default_factory=dict)


def _trace_id(trace: InstanceTrace) -> str:
    from .full_info import trace_id

    return trace_id(trace)


def best_fixed_feasible(trace: InstanceTrace, resolution: float = 1.0 / 200.0) -> BenchmarkResult:
    if trace.family == "linear":
        return _best_linear(trace)
    if trace.family == "bandit":
        return _best_bandit(trace)
    if trace.family == "bwk_lowerbound":
        return _best_lowerbound(trace)
    if trace.family == "vertex_cover":
        return _best_vertex_cover(trace, resolution)
    raise UnsupportedBenchmarkError(f"no benchmark method for family {trace.family!r}")


def _best_linear(trace: InstanceTrace) -> BenchmarkResult:
    A = trace.payload["a"].sum(axis=0)
    Bm = trace.payload["b"].sum(axis=0)  # (k, d)
    box: Box = trace.dset
    x = np.where(A >= 0, box.lower, box.upper)
    used = Bm @ x
    if np.all(used <= trace.budget + FEAS_TOL):
        return BenchmarkResult(
            x_star=x,
            opt_value=float(A @ x),
            feasibility_slack=trace.budget - used,
            method="closed-form",
            meta={"trace_id": _trace_id(trace)},
        )
    if trace.num_resources == 1:
        x = _min_linear_single_budget(A, Bm[0], box, trace.budget)
        used = Bm @ x
        return BenchmarkResult(
            x_star=x,
            opt_value=float(A @ x),
            feasibility_slack=trace.budget - used,
            method="closed-form",
            meta={"trace_id": _trace_id(trace)},
        )
    raise UnsupportedBenchmarkError(
        "multi-resource linear trace with an infeasible unconstrained minimizer"
    )


def _min_linear_single_budget(A: np.ndarray, C: np.ndarray, box: Box, cap: float) -> np.ndarray:
    """min <A, x> s.t. <C, x> <= cap over the box, by ratio sorting.

    Starting from the unconstrained coordinatewise minimizer, excess
    consumption is removed by moving coordinates whose move lowers
    consumption, cheapest cost increase per unit first; the final move is
    fractional.
    """
    x = np.where(A >= 0, box.lower, box.upper).astype(float)
    excess = float(C @ x) - cap
    if excess <= FEAS_TOL:
        return x
    moves = []  # (cost increase per unit of consumption removed, j, target)
    for j in range(x.size):
        for target in (box.lower[j], box.upper[j]):
            drop = C[j] * (x[j] - target)  # consumption removed by the move
            if drop <= 0:
                continue
            cost_up = A[j] * (target - x[j])
            moves.append((cost_up / drop, j, target, drop))
    moves.sort(key=lambda m: m[0])
    for _, j, target, drop in moves:
        if excess <= FEAS_TOL:
            break
        if drop >= excess:
            frac = excess / drop
            x[j] = x[j] + frac * (target - x[j])
            excess = 0.0
        else:
            x[j] = target
            excess -= drop
    if excess > FEAS_TOL:
        raise InfeasibleInstanceError("budget unattainable by any fixed action")
    return x


def _best_bandit(trace: InstanceTrace) -> BenchmarkResult:
    """Exact simplex program min <L, d> s.t. <C, d> <= B by support enumeration.

    An optimal basic solution uses at most two arms: either a feasible single
    arm or a two-arm mix that meets the budget with equality.
    """
    L = trace.payload["loss"].sum(axis=0)
    C = trace.payload["cons"].sum(axis=0)
    B = trace.budget
    K = L.size
    if float(C.min()) > B + FEAS_TOL:
        raise InfeasibleInstanceError("every single arm exceeds the budget")
    best_val = np.inf
    best_x = None
    for a in range(K):
        if C[a] <= B + FEAS_TOL and L[a] < best_val:
            best_val = float(L[a])
            x = np.zeros(K)
            x[a] = 1.0
            best_x = x
    for a in range(K):
        for b in range(K):
            if C[a] <= C[b] or C[a] - C[b] == 0.0:
                continue
            theta = (B - C[b]) / (C[a] - C[b])  # weight on the pricier arm a
            if 0.0 <= theta <= 1.0:
                val = float(theta * L[a] + (1.0 - theta) * L[b])
                if val < best_val - 1e-15:
                    best_val = val
                    x = np.zeros(K)
                    x[a] = theta
                    x[b] = 1.0 - theta
                    best_x = x
    used = np.array([float(C @ best_x)])
    return BenchmarkResult(
        x_star=best_x,
        opt_value=best_val,
        feasibility_slack=trace.budget - used,
        method="closed-form",
        meta={"trace_id": _trace_id(trace)},
    )


def _best_lowerbound(trace: InstanceTrace) -> BenchmarkResult:
    """Exact reward maximization for the phased family, both play semantics.

    The fixed-action optimum over the whole horizon is x = min(1, B/T)
    (reward coefficients are nonnegative, consumption is x per round). The
    meta block also records the stop-on-exhaustion optimum, where a fixed
    mix plays until the budget runs out: scanning the piecewise-linear
    objective's breakpoints x = B/n is exact.
    """
    r = trace.payload["r"]
    T = trace.horizon
    B = trace.budget
    x_star = min(1.0, B / T)
    opt = float(x_star * r.sum())

    prefix = np.cumsum(r)
    n_lo = max(1, int(math.ceil(B)))
    ns = np.arange(n_lo, T + 1)
    opt_stopped = float(np.max((B / ns) * prefix[ns - 1])) if ns.size else opt
    used = np.array([x_star * T])
    return BenchmarkResult(
        x_star=np.array([x_star]),
        opt_value=opt,
        feasibility_slack=trace.budget - used,
        method="closed-form",
        meta={"trace_id": _trace_id(trace), "opt_stopped": opt_stopped},
    )


def project_box_halfspace(
    x: np.ndarray, box: Box, w: np.ndarray, cap: float, tol: float = 1e-12
) -> np.ndarray:
    """Euclidean projection onto the box intersected with <w, x> <= cap."""
    y = box.project(x)
    if float(w @ y) <= cap + tol:
        return y
    lo, hi = 0.0, 1.0
    while float(w @ box.project(x - hi * w)) > cap:
        hi *= 2.0
        if hi > 1e18:
            raise InfeasibleInstanceError("halfspace cannot be reached inside the box")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(w @ box.project(x - mid * w)) > cap:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return box.project(x - hi * w)


def _best_vertex_cover(trace: InstanceTrace, resolution: float) -> BenchmarkResult:
    """Feasible grid search plus multi-start projected gradient ascent.

    The aggregate coverage reward is nonconcave, so the returned value is a
    certified lower bound on the true optimum, not a certificate of
    optimality. Supported for dimension <= 3.
    """
    box: Box = trace.dset
    n = box.dim
    if n > 3:
        raise UnsupportedBenchmarkError(
            "coverage benchmark supports at most 3 vertices; supply a benchmark"
        )
    prices = trace.payload["prices"].sum(axis=0)
    # aggregate per-pair counts across rounds
    W = np.zeros((n, n))
    for e in trace.payload["edges"]:
        for i, j in e:
            W[i, j] += 1.0
            W[j, i] += 1.0

    def reward(x):
        xi = x[:, None]
        xj = x[None, :]
        return 0.5 * float(np.sum(W * (xi + xj - xi * xj)))

    def reward_grad(x):
        return W @ (1.0 - x)

    pts = grid_points(box, resolution)
    feas = pts[pts @ prices <= trace.budget + FEAS_TOL]
    if feas.size == 0:
        raise InfeasibleInstanceError("no feasible grid cell under the budget")
    vals = np.array([reward(p) for p in feas])
    order = np.argsort(vals)[::-1][:10]
    best_x, best_val = None, -np.inf
    for idx in order:
        x = feas[idx].copy()
        step0 = 10.0 * resolution
        for s in range(500):
            g = reward_grad(x)
            x = project_box_halfspace(x + (step0 / math.sqrt(s + 1.0)) * g, box, prices, trace.budget)
        v = reward(x)
        if v > best_val:
            best_val, best_x = v, x
    used = np.array([float(prices @ best_x)])
    return BenchmarkResult(
        x_star=best_x,
        opt_value=float(best_val),
        feasibility_slack=trace.budget - used,
        method="multi-start",
        meta={"trace_id": _trace_id(trace), "value_is_lower_bound": True},
    )


def grid_benchmark(trace: InstanceTrace, resolution: float, maximize: bool) -> BenchmarkResult:
    """Brute-force feasible grid scan over aggregate round sums (dim <= 3)."""
    pts = grid_points(trace.dset, resolution)
    totals = np.zeros(pts.shape[0])
    used = np.zeros((pts.shape[0], trace.num_resources))
    for i, p in enumerate(pts):
        totals[i] = sum(rd.cost.eval(p) for rd in trace.rounds)
        for r, _ in enumerate(range(trace.num_resources)):
            used[i, r] = sum(rd.consumptions[r].eval(p) for rd in trace.rounds)
    feas = np.all(used <= trace.budget + FEAS_TOL, axis=1)
    if not np.any(feas):
        raise InfeasibleInstanceError("no feasible grid cell under the budget")
    vals = np.where(feas, totals, -np.inf if maximize else np.inf)
    idx = int(np.argmax(vals)) if maximize else int(np.argmin(vals))
    return BenchmarkResult(
        x_star=pts[idx],
        opt_value=float(totals[idx]),
        feasibility_slack=trace.budget - used[idx],
        method="grid",
        meta={"trace_id": _trace_id(trace)},
    )


def regret_alpha(
    report: RunReport, benchmark: BenchmarkResult, alpha: float, direction
) -> float:
    """Realized total against the alpha-weakened benchmark.

    Cost orientation: total cost - alpha * OPT. Reward orientation:
    alpha * OPT - total reward.
    """
    rid = report.meta.get("trace_id")
    bid = benchmark.meta.get("trace_id")
    if rid is not None and bid is not None and rid != bid:
        raise ValueError(f"report of {rid} measured against benchmark of {bid}")
    total = float(report.costs.sum())
    kind = direction.kind if hasattr(direction, "kind") else str(direction)
    if kind == "convex":
        return total - alpha * benchmark.opt_value
    return alpha * benchmark.opt_value - total


def cumulative_consumption(report: RunReport) -> np.ndarray:
    """Per-resource totals of realized consumption (bandit runs: net of Q0)."""
    return report.consumptions.sum(axis=0)


def default_additive_term(alpha: float, G: float, D: float, T: int, F: float) -> float:
    """Budget-independent part of the consumption guarantee.

    The guarantee has the shape kappa * B_T + s(T); this is s(T):
    2 alpha G D sqrt(2T) * ln(2 (1 + F T / (G D) + sqrt(2T))).
    """
    return (
        2.0
        * alpha
        * G
        * D
        * math.sqrt(2.0 * T)
        * math.log(2.0 * (1.0 + F * T / (G * D) + math.sqrt(2.0 * T)))
    )


def competitive_kappa(report: RunReport, B_T: float, s_T: float | None = None) -> float:
    """Empirical multiplicative budget factor (CC - s_T) / B_T."""
    if B_T <= 0:
        raise ValueError("kappa needs a positive budget")
    if s_T is None:
        meta = report.meta
        s_T = default_additive_term(
            float(meta["alpha"]), float(meta["G"]), float(meta["D"]),
            int(meta["T"]), float(meta["F"]),
        )
    cc = float(report.consumptions[:, 0].sum())
    return (cc - s_T) / B_T

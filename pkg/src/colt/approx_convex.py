"""Generalized-subgradient oracles and numeric verifiers for approximate convexity.

A nonnegative function f is alpha-approximately convex (alpha >= 1) when every
point x admits a vector H(x) with

    f(x) <= alpha * f(u) + <H(x), x - u>   for all u in the set,

and alpha-approximately concave (0 < alpha <= 1) with the inequality reversed.
The verifiers here are sampling-based falsifiers, not proofs: they hunt for a
violating pair and report the worst margin found. Four routes are covered:
the linearization inequality itself, the approximate Jensen inequality, the
convex-witness sandwich, and a grid biconjugate for dimension <= 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import Box, DecisionSet, Interval

DEFAULT_TOL = 1e-9

EvalFn = Callable[[np.ndarray], float]
GradFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Direction:
    """Inequality orientation plus its approximation factor."""

    kind: str  # "convex" | "concave"
    alpha: float

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if self.kind == "convex":
            if self.alpha < 1.0:
                raise ValueError("convex direction requires alpha >= 1")
        elif self.kind == "concave":
            if not (0.0 < self.alpha <= 1.0):
                raise ValueError("concave direction requires 0 < alpha <= 1")
        else:
            raise ValueError(f"unknown direction kind {self.kind!r}")

    @classmethod
    def convex(cls, alpha: float) -> "Direction":
        return cls("convex", float(alpha))

    @classmethod
    def concave(cls, alpha: float) -> "Direction":
        return cls("concave", float(alpha))

    @property
    def is_convex(self) -> bool:
        return self.kind == "convex"


@dataclass(frozen=True)
class SubgradientOracle:
    """Function value plus a generalized subgradient map and its norm bound.

    eval(x) must be nonnegative on the intended set; ||subgrad(x)||_2 stays
    below norm_bound. Neither is enforced at construction; the verifiers and
    property tests check both by sampling.
    """

    eval: EvalFn
    subgrad: GradFn
    norm_bound: float


@dataclass(frozen=True)
class ViolationReport:
    """Worst inequality margin found over all samples; positive = violation."""

    samples_checked: int
    worst_violation: float
    witness_pair: tuple
    tol: float = DEFAULT_TOL

    @property
    def passed(self) -> bool:
        return self.worst_violation <= self.tol


def linearization_margin(
    oracle: SubgradientOracle, direction: Direction, x: np.ndarray, u: np.ndarray
) -> float:
    """Signed margin of the linearization inequality at (x, u); positive = violation."""
    gap = (
        oracle.eval(x)
        - direction.alpha * oracle.eval(u)
        - float(np.dot(oracle.subgrad(x), x - u))
    )
    return gap if direction.is_convex else -gap


def check_linearization(
    oracle: SubgradientOracle,
    direction: Direction,
    dset: DecisionSet,
    num_pairs: int,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> ViolationReport:
    """Sample (x, u) pairs uniformly and report the worst linearization margin."""
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    rng = np.random.default_rng(seed)
    worst = -np.inf
    witness = None
    for _ in range(num_pairs):
        x = dset.sample(rng)
        u = dset.sample(rng)
        m = linearization_margin(oracle, direction, x, u)
        if m > worst:
            worst, witness = m, (x, u)
    return ViolationReport(num_pairs, float(worst), witness, tol)


def check_approx_jensen(
    oracle: SubgradientOracle,
    direction: Direction,
    dset: DecisionSet,
    num_trials: int,
    max_support: int,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> ViolationReport:
    """Approximate Jensen inequality over random finitely supported mixtures.

    Convex checks f(sum p_i x_i) <= alpha * sum p_i f(x_i); concave reverses.
    """
    if max_support < 2:
        raise ValueError("max_support must be >= 2")
    rng = np.random.default_rng(seed)
    worst = -np.inf
    witness = None
    for _ in range(num_trials):
        n = int(rng.integers(2, max_support + 1))
        pts = np.stack([dset.sample(rng) for _ in range(n)])
        p = rng.dirichlet(np.ones(n))
        mix = p @ pts
        avg = float(sum(p[i] * oracle.eval(pts[i]) for i in range(n)))
        gap = oracle.eval(mix) - direction.alpha * avg
        m = gap if direction.is_convex else -gap
        if m > worst:
            worst, witness = m, (pts, p)
    return ViolationReport(num_trials, float(worst), witness, tol)


def check_sandwich(
    f_eval: EvalFn,
    g_eval: EvalFn,
    g_subgrad: GradFn,
    alpha: float,
    dset: DecisionSet,
    num_points: int,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    relative: bool = False,
) -> ViolationReport:
    """Verify the convex-witness sandwich g <= f <= alpha * g plus convexity of g.

    Three sampled conditions share the report: the two sandwich sides at
    random points, midpoint convexity of g on random pairs, and the
    first-order inequality g(u) >= g(x) + <g_subgrad(x), u - x>. When
    `relative` is set, each margin is scaled by max(1, magnitude of the
    dominant side), so tol reads as a relative tolerance.
    """
    if alpha < 1.0:
        raise ValueError("sandwich check requires alpha >= 1")
    rng = np.random.default_rng(seed)
    worst = -np.inf
    witness = None

    def consider(margin, scale, tag, args):
        nonlocal worst, witness
        m = margin / max(1.0, scale) if relative else margin
        if m > worst:
            worst, witness = m, (tag, args)

    for _ in range(num_points):
        x = dset.sample(rng)
        fx, gx = f_eval(x), g_eval(x)
        consider(gx - fx, abs(fx), "lower", x)
        consider(fx - alpha * gx, abs(fx), "upper", x)

        a, b = dset.sample(rng), dset.sample(rng)
        ga, gb = g_eval(a), g_eval(b)
        gm = g_eval(0.5 * (a + b))
        consider(gm - 0.5 * (ga + gb), 0.5 * (abs(ga) + abs(gb)), "midpoint", (a, b))

        u = dset.sample(rng)
        first_order = gx + float(np.dot(g_subgrad(x), u - x)) - g_eval(u)
        consider(first_order, abs(gx), "first_order", (x, u))

    return ViolationReport(num_points, float(worst), witness, tol)


def estimate_norm_bound(
    subgrad: GradFn, dset: DecisionSet, num_samples: int = 10_000, seed: int = 0
) -> float:
    """Sampled estimate of sup ||subgrad(x)||_2 over the set."""
    rng = np.random.default_rng(seed)
    return max(
        float(np.linalg.norm(subgrad(dset.sample(rng)))) for _ in range(num_samples)
    )


def subgrad_from_witness(
    f_eval: EvalFn, g_subgrad: GradFn, alpha: float, g_norm_bound: float
) -> SubgradientOracle:
    """Generalized-subgradient oracle for f built from its convex witness.

    If g is convex with g <= f <= alpha * g, then alpha times any subgradient
    of g is a generalized subgradient of f, with norm bound alpha times the
    bound on ||g_subgrad||.
    """
    if alpha < 1.0:
        raise ValueError("witness construction requires alpha >= 1")
    a = float(alpha)
    return SubgradientOracle(
        eval=f_eval,
        subgrad=lambda x: a * np.asarray(g_subgrad(x), dtype=float),
        norm_bound=a * float(g_norm_bound),
    )


def combine(
    oracles: Sequence[SubgradientOracle], weights: Sequence[float]
) -> SubgradientOracle:
    """Nonnegative linear combination; the class is closed under these.

    eval and subgrad sum with the weights, and norm bounds add by the
    triangle inequality. All inputs must share direction and alpha.
    """
    if len(oracles) != len(weights):
        raise ValueError("oracles and weights must have equal length")
    ws = [float(w) for w in weights]
    if any(w < 0 for w in ws):
        raise ValueError("weights must be nonnegative")
    members = list(oracles)

    def ev(x):
        return sum(w * o.eval(x) for w, o in zip(ws, members))

    def grad(x):
        acc = None
        for w, o in zip(ws, members):
            g = w * np.asarray(o.subgrad(x), dtype=float)
            acc = g if acc is None else acc + g
        return acc

    bound = sum(w * o.norm_bound for w, o in zip(ws, members))
    return SubgradientOracle(eval=ev, subgrad=grad, norm_bound=bound)


@dataclass(frozen=True)
class BiconjugateGrid:
    """Double Fenchel conjugate sampled on a primal grid."""

    points: np.ndarray  # (n, d) primal grid
    values: np.ndarray  # (n,) f** on the grid
    f_values: np.ndarray  # (n,) f on the grid
    dual_points: np.ndarray  # (m, d) dual grid
    conjugate: np.ndarray  # (m,) f* on the dual grid


def biconjugate_grid(
    f_eval: EvalFn,
    dset: DecisionSet,
    grid_resolution: float,
    dual_bound: float | None = None,
) -> BiconjugateGrid:
    """Grid approximation of the biconjugate f** on a box of dimension <= 2.

    The conjugate is evaluated on a dual grid spanning [-dual_bound,
    dual_bound] per coordinate; for Lipschitz f the conjugate is attained
    within the subgradient range, so a norm bound on the generalized
    subgradients is the natural choice. When omitted, the bound is estimated
    from the steepest finite-difference slope on the primal grid.
    """
    if not isinstance(dset, Box):
        raise TypeError("biconjugate_grid supports box/interval sets only")
    if dset.dim > 2:
        raise ValueError(f"unsupported dimension {dset.dim}: the grid cost is quadratic")

    from .geometry import grid_points

    pts = grid_points(dset, grid_resolution)
    fvals = np.array([f_eval(p) for p in pts])

    if dual_bound is None:
        slope = 0.0
        if dset.dim == 1:
            x = pts[:, 0]
            slope = float(np.max(np.abs(np.diff(fvals) / np.diff(x))))
        else:
            # steepest slope along either axis of the lattice
            n0 = np.unique(pts[:, 0]).size
            n1 = np.unique(pts[:, 1]).size
            f2 = fvals.reshape(n0, n1)
            x0 = np.unique(pts[:, 0])
            x1 = np.unique(pts[:, 1])
            if n0 > 1:
                slope = max(slope, float(np.max(np.abs(np.diff(f2, axis=0) / np.diff(x0)[:, None]))))
            if n1 > 1:
                slope = max(slope, float(np.max(np.abs(np.diff(f2, axis=1) / np.diff(x1)[None, :]))))
        dual_bound = 1.2 * slope + 1e-6

    span = 2.0 * dual_bound
    per_axis = max(3, int(np.ceil(span / grid_resolution)) + 1)
    # cap the dual lattice so the d=2 cost stays desk-scale
    per_axis = min(per_axis, 4001 if dset.dim == 1 else 201)
    axis = np.linspace(-dual_bound, dual_bound, per_axis)
    if dset.dim == 1:
        duals = axis[:, None]
    else:
        g0, g1 = np.meshgrid(axis, axis, indexing="ij")
        duals = np.stack([g0.ravel(), g1.ravel()], axis=1)

    # f*(y) = max_x <y, x> - f(x); f**(x) = max_y <y, x> - f*(y), chunked.
    def chunked_max(rows, cols, col_vals):
        out = np.full(rows.shape[0], -np.inf)
        step = max(1, 2_000_000 // max(1, cols.shape[0]))
        for i in range(0, rows.shape[0], step):
            block = rows[i : i + step] @ cols.T - col_vals[None, :]
            out[i : i + step] = block.max(axis=1)
        return out

    f_star = chunked_max(duals, pts, fvals)
    f_star_star = chunked_max(pts, duals, f_star)
    return BiconjugateGrid(pts, f_star_star, fvals, duals, f_star)

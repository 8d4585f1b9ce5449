"""Convex decision sets with Euclidean projection and diameter.

Three set families are supported: axis-aligned boxes, the probability
simplex, and closed intervals (the 1-d box). These are the only domains
the instance generators produce, so nothing more general is implemented.
"""

from __future__ import annotations

import numpy as np

MEMBERSHIP_TOL = 1e-9


class DecisionSet:
    """Base class for a non-empty, closed, convex decision set."""

    dim: int

    def project(self, point: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def contains(self, point: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        raise NotImplementedError

    def center(self) -> np.ndarray:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw a uniformly distributed member of the set."""
        raise NotImplementedError

    def _check_dim(self, point: np.ndarray) -> np.ndarray:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(
                f"point of shape {p.shape} does not match set dimension {self.dim}"
            )
        return p


class Box(DecisionSet):
    """Axis-aligned box {x : lower <= x <= upper}."""

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("box bounds must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("box requires lower[i] <= upper[i]")
        self.dim = self.lower.size

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls(np.zeros(dim), np.ones(dim))

    def project(self, point):
        p = self._check_dim(point)
        return np.clip(p, self.lower, self.upper)

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, point, tol=MEMBERSHIP_TOL):
        p = self._check_dim(point)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def center(self):
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng):
        return self.lower + rng.random(self.dim) * (self.upper - self.lower)

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class Interval(Box):
    """Closed interval [lo, hi]; the 1-dimensional box."""

    def __init__(self, lo: float, hi: float):
        super().__init__([lo], [hi])
        self.lo = float(lo)
        self.hi = float(hi)

    def __repr__(self):
        return f"Interval({self.lo}, {self.hi})"


class Simplex(DecisionSet):
    """Probability simplex {x >= 0, sum(x) = 1} on `dim` coordinates."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("simplex dimension must be >= 1")
        self.dim = int(dim)

    def project(self, point):
        """Euclidean projection by the sorted-threshold method.

        Sort descending, locate the largest support size rho whose uniform
        shift keeps all kept coordinates positive, subtract the shift and
        clamp at zero. Exact in finitely many arithmetic steps.
        """
        p = self._check_dim(point)
        u = np.sort(p)[::-1]
        css = np.cumsum(u)
        ks = np.arange(1, self.dim + 1)
        mask = u + (1.0 - css) / ks > 0
        rho = int(ks[mask][-1])
        tau = (css[rho - 1] - 1.0) / rho
        return np.maximum(p - tau, 0.0)

    def diameter(self):
        # distance between two vertices e_i, e_j
        return float(np.sqrt(2.0)) if self.dim >= 2 else 0.0

    def contains(self, point, tol=MEMBERSHIP_TOL):
        p = self._check_dim(point)
        return bool(np.all(p >= -tol) and abs(float(p.sum()) - 1.0) <= tol)

    def center(self):
        return np.full(self.dim, 1.0 / self.dim)

    def sample(self, rng):
        return rng.dirichlet(np.ones(self.dim))

    def __repr__(self):
        return f"Simplex({self.dim})"


def project(dset: DecisionSet, point: np.ndarray) -> np.ndarray:
    return dset.project(point)


def diameter(dset: DecisionSet) -> float:
    return dset.diameter()


def grid_points(dset: DecisionSet, resolution: float) -> np.ndarray:
    """Regular grid covering the set, one row per point.

    Boxes/intervals get an axis-aligned lattice with spacing <= resolution
    (dim <= 3); the simplex gets a barycentric lattice. Used by brute-force
    benchmarks and the grid biconjugate.
    """
    if isinstance(dset, Box):
        if dset.dim > 3:
            raise ValueError("grid_points supports box dimension <= 3")
        axes = []
        for lo, hi in zip(dset.lower, dset.upper):
            n = max(2, int(np.ceil((hi - lo) / resolution)) + 1) if hi > lo else 1
            axes.append(np.linspace(lo, hi, n))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
    if isinstance(dset, Simplex):
        if dset.dim > 3:
            raise ValueError("grid_points supports simplex dimension <= 3")
        n = max(1, int(np.ceil(1.0 / resolution)))
        if dset.dim == 1:
            return np.array([[1.0]])
        if dset.dim == 2:
            a = np.linspace(0.0, 1.0, n + 1)
            return np.stack([a, 1.0 - a], axis=1)
        pts = []
        for i in range(n + 1):
            for j in range(n + 1 - i):
                pts.append((i / n, j / n, 1.0 - i / n - j / n))
        return np.asarray(pts)
    raise TypeError(f"unsupported set type {type(dset).__name__}")

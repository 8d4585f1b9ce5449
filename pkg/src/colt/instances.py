"""Problem-instance generators: per-round cost/consumption oracles with budgets.

Each generator returns an InstanceTrace whose rounds hold subgradient oracles
sharing the instance's approximation factor and inequality direction, along
with the magnitude bounds (G for subgradient norms before the factor, F for
function values) that the learner schedules need. Generation is deterministic
from the seed, and traces serialize to a line-oriented plain-text format (one
record per round: index, family tag, JSON parameter payload) so harness runs
are replayable.

Families:
  linear          cost/consumption <a_t, x>, <b_ti, x> on the unit box (factor 1)
  vertex_cover    per-edge coverage reward on [0,1]^n with linear prices (factor 1/2,
                  reward orientation)
  bwk_lowerbound  phased two-arm reward family on [0,1] used by the budget
                  lower-bound experiment
  bandit          K-armed losses/consumptions in [0,1] as linear functions on
                  the simplex
plus the regularized phase-retrieval objective with its convex witness, the
spectral norm by power iteration, and the exponentially weighted gradient
integral certifying approximate concavity of weakly diminishing-returns
submodular functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .approx_convex import Direction, SubgradientOracle
from .geometry import Box, DecisionSet, Interval, Simplex


@dataclass(frozen=True)
class RoundData:
    cost: SubgradientOracle
    consumptions: tuple[SubgradientOracle, ...]


@dataclass(frozen=True)
class InstanceTrace:
    family: str
    dset: DecisionSet
    horizon: int
    budget: float
    num_resources: int
    alpha: float
    direction: Direction
    G: float
    F: float
    seed: int
    witness: np.ndarray
    rounds: tuple[RoundData, ...]
    payload: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _linear_oracle(v: np.ndarray) -> SubgradientOracle:
    v = np.asarray(v, dtype=float)
    return SubgradientOracle(
        eval=lambda x, v=v: float(v @ x),
        subgrad=lambda x, v=v: v,
        norm_bound=float(np.linalg.norm(v)),
    )


# ---------------------------------------------------------------------------
# linear family
# ---------------------------------------------------------------------------

def _linear_rounds(a: np.ndarray, b: np.ndarray) -> tuple[RoundData, ...]:
    rounds = []
    for t in range(a.shape[0]):
        cons = tuple(_linear_oracle(b[t, i]) for i in range(b.shape[1]))
        rounds.append(RoundData(cost=_linear_oracle(a[t]), consumptions=cons))
    return tuple(rounds)


def gen_linear(
    d: int,
    T: int,
    B_T: float | None = None,
    k: int = 1,
    seed: int = 0,
) -> InstanceTrace:
    """Convex baseline: nonnegative linear costs and consumptions on [0,1]^d."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if T < 1:
        raise ValueError("horizon must be >= 1")
    if B_T is None:
        B_T = float(np.sqrt(T))
    rng = np.random.default_rng(seed)
    a = rng.random((T, d))
    b = rng.random((T, k, d))
    G = max(
        float(np.max(np.linalg.norm(a, axis=1))),
        float(np.max(np.linalg.norm(b, axis=2))),
    )
    F = float(np.max(a.sum(axis=1)))  # max of <a_t, x> over the unit box
    return InstanceTrace(
        family="linear",
        dset=Box.unit(d),
        horizon=T,
        budget=float(B_T),
        num_resources=k,
        alpha=1.0,
        direction=Direction.convex(1.0),
        G=G,
        F=F,
        seed=seed,
        witness=np.zeros(d),
        rounds=_linear_rounds(a, b),
        payload={"a": a, "b": b},
    )


# ---------------------------------------------------------------------------
# vertex cover family (reward orientation)
# ---------------------------------------------------------------------------

def _cover_reward_oracle(edges: np.ndarray, deg: np.ndarray) -> SubgradientOracle:
    # expected number of covered edges; supergradient is half the degree
    # vector, constant in x
    def ev(x, e=edges):
        if e.size == 0:
            return 0.0
        xi, xj = x[e[:, 0]], x[e[:, 1]]
        return float(np.sum(xi + xj - xi * xj))

    half_deg = 0.5 * deg
    return SubgradientOracle(
        eval=ev,
        subgrad=lambda x, h=half_deg: h,
        norm_bound=float(np.linalg.norm(half_deg)),
    )


def gen_vertex_cover(
    n: int,
    T: int,
    edge_prob: float,
    price_range: tuple[float, float],
    B_T: float | None = None,
    seed: int = 0,
    edges: list[np.ndarray] | None = None,
    prices: np.ndarray | None = None,
) -> InstanceTrace:
    """Edge-coverage rewards with vertex prices on the unit box.

    Each round draws a fresh random edge set and uniform prices; pass
    explicit `edges` / `prices` lists to play a hand-built adversarial
    schedule instead. Rewards are maximized: the trace carries concave
    orientation with factor 1/2 and the learners consume it in reward
    orientation.
    """
    if n < 2:
        raise ValueError("need at least 2 vertices")
    if not (0.0 <= edge_prob <= 1.0):
        raise ValueError("edge_prob must lie in [0, 1]")
    lo, hi = float(price_range[0]), float(price_range[1])
    if lo < 0 or hi < lo:
        raise ValueError("price range must satisfy 0 <= lo <= hi")
    if B_T is None:
        B_T = float(np.sqrt(T))
    rng = np.random.default_rng(seed)
    pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=int)

    if edges is None:
        edges = []
        for _ in range(T):
            mask = rng.random(len(pairs)) < edge_prob
            edges.append(pairs[mask])
    else:
        edges = [np.asarray(e, dtype=int).reshape(-1, 2) for e in edges]
        if len(edges) != T:
            raise ValueError("explicit edge schedule must cover every round")
    if prices is None:
        prices = lo + (hi - lo) * rng.random((T, n))
    else:
        prices = np.asarray(prices, dtype=float)
        if prices.shape != (T, n):
            raise ValueError("explicit prices must have shape (T, n)")
        if np.any(prices < 0):
            raise ValueError("prices must be nonnegative")

    degs = np.zeros((T, n))
    rounds = []
    for t in range(T):
        e = edges[t]
        if e.size:
            np.add.at(degs[t], e[:, 0], 1.0)
            np.add.at(degs[t], e[:, 1], 1.0)
        rounds.append(
            RoundData(
                cost=_cover_reward_oracle(e, degs[t]),
                consumptions=(_linear_oracle(prices[t]),),
            )
        )

    max_deg_norm = float(np.max(np.linalg.norm(degs, axis=1))) if T else 0.0
    max_price_norm = float(np.max(np.linalg.norm(prices, axis=1))) if T else 0.0
    G = max(max_deg_norm, 2.0 * max_price_norm)
    F = float(max(len(e) for e in edges)) if T else 0.0
    return InstanceTrace(
        family="vertex_cover",
        dset=Box.unit(n),
        horizon=T,
        budget=float(B_T),
        num_resources=1,
        alpha=0.5,
        direction=Direction.concave(0.5),
        G=G,
        F=F,
        seed=seed,
        witness=np.zeros(n),
        rounds=tuple(rounds),
        payload={"edges": edges, "prices": prices, "degrees": degs},
    )


# ---------------------------------------------------------------------------
# lower-bound family
# ---------------------------------------------------------------------------

def gen_bwk_lowerbound(T: int, B_T: int, tau: int) -> InstanceTrace:
    """Phased two-arm reward instance on [0,1] for the budget lower bound.

    The horizon splits into phases of B_T rounds each; the active arm pays
    sigma * B_T / T per unit of play during phase sigma <= tau and nothing
    afterwards, while consuming one unit per round. The horizon is padded
    down to a multiple of B_T when needed (recorded in meta). Deterministic:
    no randomness is involved.
    """
    B = int(B_T)
    if B < 1:
        raise ValueError("budget must be a positive integer number of rounds")
    if T < B:
        raise ValueError("horizon must be at least one phase long")
    horizon = (T // B) * B
    n_phases = horizon // B
    if not (1 <= tau <= n_phases):
        raise ValueError(f"tau must lie in [1, {n_phases}]")

    sigma = np.arange(horizon) // B + 1  # phase index per round, 1-based
    r = np.where(sigma <= tau, sigma * B / horizon, 0.0)
    rounds = tuple(
        RoundData(
            cost=_linear_oracle(np.array([r[t]])),
            consumptions=(_linear_oracle(np.array([1.0])),),
        )
        for t in range(horizon)
    )
    return InstanceTrace(
        family="bwk_lowerbound",
        dset=Interval(0.0, 1.0),
        horizon=horizon,
        budget=float(B),
        num_resources=1,
        alpha=1.0,
        direction=Direction.concave(1.0),
        G=1.0,
        F=float(r.max()),
        seed=0,
        witness=np.array([B / horizon]),
        rounds=rounds,
        payload={"r": r},
        meta={"requested_horizon": T, "tau": tau, "num_phases": n_phases},
    )


# ---------------------------------------------------------------------------
# K-armed bandit family
# ---------------------------------------------------------------------------

def gen_bandit(
    K: int,
    T: int,
    B_T: float | None = None,
    seed: int = 0,
    loss_means: np.ndarray | None = None,
) -> InstanceTrace:
    """K-armed losses/consumptions in [0,1] as linear functions on the simplex.

    Arm 0 is both cheapest and lowest-loss: its per-round consumption is
    drawn below B_T / T so the single-arm benchmark is feasible, while the
    remaining arms consume uniformly in [0,1]. Losses fluctuate +-0.2 around
    fixed per-arm means.
    """
    if K < 1:
        raise ValueError("need at least one arm")
    if T < 1:
        raise ValueError("horizon must be >= 1")
    if B_T is None:
        B_T = float(np.sqrt(T))
    rng = np.random.default_rng(seed)
    if loss_means is None:
        loss_means = np.linspace(0.3, 0.8, K)
    else:
        loss_means = np.asarray(loss_means, dtype=float)
        if loss_means.shape != (K,):
            raise ValueError("loss_means must have one entry per arm")
    loss = np.clip(loss_means[None, :] + 0.4 * (rng.random((T, K)) - 0.5), 0.0, 1.0)
    cons = rng.random((T, K))
    cheap_cap = min(1.0, B_T / T)
    cons[:, 0] = cheap_cap * rng.random(T)
    meta = {}
    total0 = float(cons[:, 0].sum())
    if total0 > B_T:
        # keeps the recorded witness feasible even in freak draws
        cons[:, 0] *= B_T / total0 if total0 > 0 else 0.0
        meta["rescaled_cheap_arm"] = True

    witness = np.zeros(K)
    witness[0] = 1.0
    G = max(
        float(np.max(np.linalg.norm(loss, axis=1))),
        float(np.max(np.linalg.norm(cons, axis=1))),
    )
    return InstanceTrace(
        family="bandit",
        dset=Simplex(K),
        horizon=T,
        budget=float(B_T),
        num_resources=1,
        alpha=1.0,
        direction=Direction.convex(1.0),
        G=G,
        F=float(loss.max()),
        seed=seed,
        witness=witness,
        rounds=_linear_rounds(loss, cons[:, None, :]),
        payload={"loss": loss, "cons": cons},
        meta=meta,
    )


# ---------------------------------------------------------------------------
# regularized phase retrieval
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseRetrievalProblem:
    """Amplitude-measurement objective with its convex witness decomposition."""

    f_eval: Callable[[np.ndarray], float]
    g_eval: Callable[[np.ndarray], float]
    g_subgrad: Callable[[np.ndarray], np.ndarray]
    alpha: float
    phi: np.ndarray
    y: np.ndarray
    gamma: float
    lambda_reg: float
    op_norm: float
    planted: np.ndarray


def operator_norm(phi: np.ndarray, rel_tol: float = 1e-10, max_iters: int = 10_000) -> float:
    """Largest singular value via power iteration on the Gram matrix."""
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0 or not np.any(phi):
        raise ValueError("operator norm of a zero or empty matrix is not supported")
    gram = phi.T @ phi
    n = gram.shape[0]
    # deterministic start with all modes present
    v = 1.0 + np.arange(n) / max(1, n)
    v /= np.linalg.norm(v)
    prev = 0.0
    for it in range(1, max_iters + 1):
        w = gram @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            # started in the null space; restart off-axis
            v = np.ones(n) / np.sqrt(n)
            continue
        v = w / nw
        est = float(np.sqrt(v @ gram @ v))
        if it > 1 and abs(est - prev) <= rel_tol * max(est, 1e-300):
            return est
        prev = est
    raise ArithmeticError(
        f"power iteration did not reach relative tolerance {rel_tol} in {max_iters} iterations"
    )


def gen_phase_retrieval(
    m: int,
    n: int,
    lambda_reg: float,
    dset: Box,
    seed: int = 0,
) -> PhaseRetrievalProblem:
    """Amplitude-flow objective 0.5||y - |Phi x|||^2 + (lambda/2)||x||^2.

    Measurements come from a planted point of the set, so y is nonnegative
    and the residual vanishes at the plant. The convex witness subtracts the
    squared hinge of the shrunk residual; its subgradient assembles from the
    constant + positive-semidefinite quadratic + squared-hinge composition
    terms, taking 0 at the |.| kink.
    """
    if lambda_reg <= 0:
        raise ValueError("regularization weight must be positive")
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(m, n))
    planted = dset.sample(rng)
    y = np.abs(phi @ planted)
    s = operator_norm(phi)
    gamma = lambda_reg / (s * s)
    shrunk = y / (1.0 + gamma)
    quad = lambda_reg * (np.eye(n) - (phi.T @ phi) / (s * s))  # PSD by construction

    def f_eval(x):
        resid = y - np.abs(phi @ x)
        return float(0.5 * resid @ resid + 0.5 * lambda_reg * float(x @ x))

    def g_eval(x):
        hinge = np.maximum(shrunk - np.abs(phi @ x), 0.0)
        return float(f_eval(x) - 0.5 * (1.0 + gamma) * hinge @ hinge)

    def g_subgrad(x):
        z = phi @ x
        active = np.maximum(np.abs(z) - shrunk, 0.0) * np.sign(z)
        return quad @ x + (1.0 + gamma) * (phi.T @ active)

    return PhaseRetrievalProblem(
        f_eval=f_eval,
        g_eval=g_eval,
        g_subgrad=g_subgrad,
        alpha=1.0 + 1.0 / gamma,
        phi=phi,
        y=y,
        gamma=gamma,
        lambda_reg=lambda_reg,
        op_norm=s,
        planted=planted,
    )


# ---------------------------------------------------------------------------
# exponentially weighted gradient integral
# ---------------------------------------------------------------------------

def non_oblivious_grad(
    F_grad: Callable[[np.ndarray], np.ndarray],
    gamma: float,
    x: np.ndarray,
    num_nodes: int = 32,
) -> np.ndarray:
    """Gauss-Legendre approximation of int_0^1 e^{gamma (z-1)} F_grad(z x) dz."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if num_nodes < 2:
        raise ValueError("need at least two quadrature nodes")
    nodes, weights = np.polynomial.legendre.leggauss(num_nodes)
    z = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    x = np.asarray(x, dtype=float)
    acc = np.zeros_like(x)
    for zi, wi in zip(z, w):
        acc = acc + wi * np.exp(gamma * (zi - 1.0)) * np.asarray(F_grad(zi * x), float)
    return acc


# ---------------------------------------------------------------------------
# plain-text trace serialization
# ---------------------------------------------------------------------------

def _dset_spec(dset: DecisionSet) -> str:
    if isinstance(dset, Interval):
        return f"interval {_fmt(dset.lo)} {_fmt(dset.hi)}"
    if isinstance(dset, Box):
        lo = ",".join(_fmt(v) for v in dset.lower)
        hi = ",".join(_fmt(v) for v in dset.upper)
        return f"box {lo} {hi}"
    if isinstance(dset, Simplex):
        return f"simplex {dset.dim}"
    raise TypeError(f"cannot serialize set {type(dset).__name__}")


def _dset_parse(spec: str) -> DecisionSet:
    kind, *args = spec.split()
    if kind == "interval":
        return Interval(float(args[0]), float(args[1]))
    if kind == "box":
        lo = [float(v) for v in args[0].split(",")]
        hi = [float(v) for v in args[1].split(",")]
        return Box(lo, hi)
    if kind == "simplex":
        return Simplex(int(args[0]))
    raise ValueError(f"unknown set spec {spec!r}")


def _round_payload(trace: InstanceTrace, t: int) -> dict:
    p = trace.payload
    if trace.family == "linear":
        return {"a": p["a"][t].tolist(), "b": p["b"][t].tolist()}
    if trace.family == "vertex_cover":
        return {"edges": p["edges"][t].tolist(), "prices": p["prices"][t].tolist()}
    if trace.family == "bwk_lowerbound":
        return {"r": float(p["r"][t])}
    if trace.family == "bandit":
        return {"loss": p["loss"][t].tolist(), "cons": p["cons"][t].tolist()}
    raise ValueError(f"family {trace.family!r} has no round-record form")


def save_trace(trace: InstanceTrace, path) -> None:
    """Write the documented plain-text round-record format.

    Header lines start with '#' and carry the trace metadata as `#key value`
    pairs; each subsequent line holds one round as
    `index<TAB>family<TAB>payload-JSON`.
    """
    lines = ["#colt-trace v1"]
    lines.append(f"#family {trace.family}")
    lines.append(f"#horizon {trace.horizon}")
    lines.append(f"#budget {_fmt(trace.budget)}")
    lines.append(f"#num_resources {trace.num_resources}")
    lines.append(f"#alpha {_fmt(trace.alpha)}")
    lines.append(f"#direction {trace.direction.kind}")
    lines.append(f"#G {_fmt(trace.G)}")
    lines.append(f"#F {_fmt(trace.F)}")
    lines.append(f"#seed {trace.seed}")
    lines.append(f"#dset {_dset_spec(trace.dset)}")
    lines.append("#witness " + ",".join(_fmt(v) for v in trace.witness))
    lines.append("#meta " + json.dumps(trace.meta, sort_keys=True))
    for t in range(trace.horizon):
        payload = json.dumps(_round_payload(trace, t), sort_keys=True)
        lines.append(f"{t + 1}\t{trace.family}\t{payload}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trace(path) -> InstanceTrace:
    """Rebuild a trace (oracles included) from its plain-text record."""
    header: dict[str, str] = {}
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(" ")
                header[key] = value
            else:
                idx, family, payload = line.split("\t")
                records.append((int(idx), family, json.loads(payload)))
    records.sort(key=lambda r: r[0])
    family = header["family"]
    T = int(header["horizon"])
    if len(records) != T:
        raise ValueError(f"expected {T} round records, found {len(records)}")
    dset = _dset_parse(header["dset"])
    direction = (
        Direction.convex(float(header["alpha"]))
        if header["direction"] == "convex"
        else Direction.concave(float(header["alpha"]))
    )

    if family == "linear":
        a = np.array([r[2]["a"] for r in records])
        b = np.array([r[2]["b"] for r in records])
        payload = {"a": a, "b": b}
        rounds = _linear_rounds(a, b)
    elif family == "bandit":
        loss = np.array([r[2]["loss"] for r in records])
        cons = np.array([r[2]["cons"] for r in records])
        payload = {"loss": loss, "cons": cons}
        rounds = _linear_rounds(loss, cons[:, None, :])
    elif family == "bwk_lowerbound":
        r_coef = np.array([r[2]["r"] for r in records])
        payload = {"r": r_coef}
        rounds = tuple(
            RoundData(
                cost=_linear_oracle(np.array([r_coef[t]])),
                consumptions=(_linear_oracle(np.array([1.0])),),
            )
            for t in range(T)
        )
    elif family == "vertex_cover":
        n = dset.dim
        edges = [np.asarray(r[2]["edges"], dtype=int).reshape(-1, 2) for r in records]
        prices = np.array([r[2]["prices"] for r in records])
        degs = np.zeros((T, n))
        rounds_l = []
        for t in range(T):
            e = edges[t]
            if e.size:
                np.add.at(degs[t], e[:, 0], 1.0)
                np.add.at(degs[t], e[:, 1], 1.0)
            rounds_l.append(
                RoundData(
                    cost=_cover_reward_oracle(e, degs[t]),
                    consumptions=(_linear_oracle(prices[t]),),
                )
            )
        payload = {"edges": edges, "prices": prices, "degrees": degs}
        rounds = tuple(rounds_l)
    else:
        raise ValueError(f"unknown trace family {family!r}")

    return InstanceTrace(
        family=family,
        dset=dset,
        horizon=T,
        budget=float(header["budget"]),
        num_resources=int(header["num_resources"]),
        alpha=float(header["alpha"]),
        direction=direction,
        G=float(header["G"]),
        F=float(header["F"]),
        seed=int(header["seed"]),
        witness=np.array([float(v) for v in header["witness"].split(",")]),
        rounds=rounds,
        payload=payload,
        meta=json.loads(header.get("meta", "{}")),
    )

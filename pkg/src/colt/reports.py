"""Per-round run records and their CSV serialization.

A RunReport holds one learner trajectory: per-round rows plus a terminal
block of summary metrics. CSV files carry a header row, exactly one data row
per round, and trailing comment lines (prefix '#') with the terminal block
and run metadata. Floats are written with 17 significant digits so a
write/read cycle is lossless for doubles.

Row schemas
  full_info / olo:  t, <action digest>, cost, cons_<i>..., Q_<i>..., eta
  bandit:           t, arm, cost, cons_0, Q_0, eta, gamma, est_loss_norm,
                    surrogate

The action digest is the full vector for dimension <= 8, otherwise the
Euclidean norm followed by the first four coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIGEST_DIM = 8


def fmt(x) -> str:
    return format(float(x), ".17g")


@dataclass
class RunReport:
    kind: str  # "full_info" | "bandit" | "olo"
    horizon: int
    num_resources: int
    actions: np.ndarray  # (T, d) actions, or (T,) arms for bandit runs
    costs: np.ndarray  # (T,) realized cost (or reward / loss) values
    consumptions: np.ndarray  # (T, k)
    queue: np.ndarray  # (T, k) budget counters after each round
    eta: np.ndarray  # (T,) step sizes / learning rates
    gamma: np.ndarray | None = None  # bandit exploration rates (as sampled)
    arms: np.ndarray | None = None
    est_loss_norm: np.ndarray | None = None
    surrogate: np.ndarray | None = None
    terminal: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def total_cost(self) -> float:
        return float(self.costs.sum())


def _action_columns(d: int) -> list[str]:
    if d <= DIGEST_DIM:
        return [f"x{i}" for i in range(d)]
    return ["xnorm"] + [f"x{i}" for i in range(4)]


def _action_digest(x: np.ndarray) -> list[float]:
    if x.size <= DIGEST_DIM:
        return [float(v) for v in x]
    return [float(np.linalg.norm(x))] + [float(v) for v in x[:4]]


def report_columns(report: RunReport) -> list[str]:
    k = report.num_resources
    if report.kind == "bandit":
        return ["t", "arm", "cost", "cons_0", "Q_0", "eta", "gamma",
                "est_loss_norm", "surrogate"]
    d = report.actions.shape[1]
    return (
        ["t"]
        + _action_columns(d)
        + ["cost"]
        + [f"cons_{i}" for i in range(k)]
        + [f"Q_{i}" for i in range(k)]
        + ["eta"]
    )


def report_rows(report: RunReport):
    """Yield one list of floats per round, matching report_columns."""
    for t in range(report.horizon):
        if report.kind == "bandit":
            yield [
                float(t + 1),
                float(report.arms[t]),
                float(report.costs[t]),
                float(report.consumptions[t, 0]),
                float(report.queue[t, 0]),
                float(report.eta[t]),
                float(report.gamma[t]),
                float(report.est_loss_norm[t]),
                float(report.surrogate[t]),
            ]
        else:
            row = [float(t + 1)]
            row += _action_digest(report.actions[t])
            row.append(float(report.costs[t]))
            row += [float(v) for v in report.consumptions[t]]
            row += [float(v) for v in report.queue[t]]
            row.append(float(report.eta[t]))
            yield row


def write_report_csv(report: RunReport, path) -> None:
    lines = [",".join(report_columns(report))]
    for row in report_rows(report):
        lines.append(",".join(fmt(v) for v in row))
    for key in sorted(report.terminal):
        lines.append(f"#terminal {key} {fmt(report.terminal[key])}")
    for key in sorted(report.meta):
        lines.append(f"#meta {key} {report.meta[key]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_report_csv(path):
    """Return (columns, rows array, terminal dict, meta dict)."""
    columns: list[str] = []
    rows: list[list[float]] = []
    terminal: dict[str, float] = {}
    meta: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#terminal "):
                _, key, value = line.split(" ", 2)
                terminal[key] = float(value)
            elif line.startswith("#meta "):
                _, key, value = line.split(" ", 2)
                meta[key] = value
            elif not columns:
                columns = line.split(",")
            else:
                rows.append([float(v) for v in line.split(",")])
    return columns, np.asarray(rows), terminal, meta

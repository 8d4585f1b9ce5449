"""Experiment harness: configs, seed-replicated runs, verification, summaries.

A config names an instance family, a learner, horizon and seed lists, and a
budget rule; the harness executes every (horizon, seed) cell, measures
regret and consumption against the offline benchmark, records the margin of
every enabled inequality check, and writes one CSV per run plus a summary
CSV (and matplotlib figures alongside, unless disabled). Outputs are
deterministic: identical configs produce byte-identical CSVs.

Config files are flat key-value text, one `key = value` per line, with
dotted section prefixes:

    instance.family = linear
    instance.d = 2
    learner.name = full_info
    run.horizons = 1000,10000
    run.seeds = 0..19
    run.budget = sqrt:1.0
    run.out_dir = out
    verify.enabled = on
    plots.enabled = on
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bandit as bandit_mod
from . import oracle as oracle_mod
from .full_info import run_full_info, schedule_guarantees
from .instances import InstanceTrace, gen_bandit, gen_bwk_lowerbound, gen_linear, gen_vertex_cover
from .reports import RunReport, fmt, write_report_csv

VERIFY_TOL = 1e-9


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    instance: dict
    learner: dict
    horizons: list[int]
    seeds: list[int]
    budget_rule: tuple[str, float] = ("sqrt", 1.0)
    out_dir: str = "out"
    verify: bool = True
    plots: bool = True
    jobs: int = 1

    def validate(self):
        if not self.horizons:
            raise ConfigError("horizon list must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if not self.seeds:
            raise ConfigError("seed list must be nonempty")
        kind, value = self.budget_rule
        if kind not in ("sqrt", "abs"):
            raise ConfigError(f"unknown budget rule {kind!r}")
        for T in self.horizons:
            if self.budget_for(T) < 0:
                raise ConfigError("budget rule must produce a nonnegative budget")
        if self.learner.get("name") not in ("full_info", "bandit"):
            raise ConfigError(f"unknown learner {self.learner.get('name')!r}")

    def budget_for(self, T: int) -> float:
        kind, value = self.budget_rule
        return value * math.sqrt(T) if kind == "sqrt" else value


def parse_kv_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_int_list(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v != ""]


def _parse_budget(text: str) -> tuple[str, float]:
    if ":" in text:
        kind, value = text.split(":", 1)
        return kind.strip(), float(value)
    if text.strip() == "sqrt":
        return "sqrt", 1.0
    return "abs", float(text)


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    if value in ("on", "true", "yes"):
        return True
    if value in ("off", "false", "no"):
        return False
    return value


def make_config(kv: dict[str, str]) -> ExperimentConfig:
    instance: dict = {"family": "linear"}
    learner: dict = {"name": "full_info"}
    cfg = ExperimentConfig(
        instance=instance,
        learner=learner,
        horizons=[1000],
        seeds=[0],
        out_dir=os.environ.get("COLT_OUT_DIR", "out"),
    )
    try:
        for key, value in kv.items():
            section, _, name = key.partition(".")
            if section == "instance":
                instance[name or "family"] = _coerce(value) if name else value
            elif section == "learner":
                learner[name or "name"] = _coerce(value) if name else value
            elif section == "run":
                if name == "horizons":
                    cfg.horizons = _parse_int_list(value)
                elif name == "seeds":
                    cfg.seeds = _parse_int_list(value)
                elif name == "budget":
                    cfg.budget_rule = _parse_budget(value)
                elif name == "out_dir":
                    cfg.out_dir = value
                elif name == "jobs":
                    cfg.jobs = int(value)
                else:
                    raise ConfigError(f"unknown run key {name!r}")
            elif section == "verify":
                cfg.verify = bool(_coerce(value))
            elif section == "plots":
                cfg.plots = bool(_coerce(value))
            else:
                raise ConfigError(f"unknown config section {section!r}")
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from exc
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# instance / learner dispatch
# ---------------------------------------------------------------------------

def build_instance(spec: dict, T: int, B_T: float, seed: int) -> InstanceTrace:
    params = {k: v for k, v in spec.items() if k not in ("family", "seed", "vary_seed")}
    family = spec.get("family", "linear")
    if family == "linear":
        return gen_linear(
            d=int(params.get("d", 2)), T=T, B_T=B_T, k=int(params.get("k", 1)), seed=seed
        )
    if family == "vertex_cover":
        return gen_vertex_cover(
            n=int(params.get("n", 6)),
            T=T,
            edge_prob=float(params.get("edge_prob", 0.3)),
            price_range=(float(params.get("price_lo", 0.0)), float(params.get("price_hi", 1.0))),
            B_T=B_T,
            seed=seed,
        )
    if family == "bandit":
        return gen_bandit(K=int(params.get("K", 2)), T=T, B_T=B_T, seed=seed)
    if family == "bwk_lowerbound":
        return gen_bwk_lowerbound(T=T, B_T=int(B_T), tau=int(params.get("tau", 1)))
    raise ConfigError(f"unknown instance family {family!r}")


def _instance_seed(config: ExperimentConfig, cell_seed: int) -> int:
    # bandit cells replicate policy randomness on a fixed trace by default;
    # full-information learners are deterministic, so the trace must vary
    default_vary = config.learner["name"] == "full_info"
    vary = bool(config.instance.get("vary_seed", default_vary))
    return cell_seed if vary else int(config.instance.get("seed", 0))


def run_learner(config: ExperimentConfig, trace: InstanceTrace, seed: int) -> RunReport:
    spec = config.learner
    if spec["name"] == "full_info":
        params = None
        if "lam" in spec and "V" in spec:
            params = (float(spec["lam"]), float(spec["V"]))
        return run_full_info(trace, params=params)
    return bandit_mod.run_bandit(
        trace,
        seed=seed,
        variant=str(spec.get("variant", "proof")),
        loss_scale=float(spec.get("loss_scale", 1.0)),
    )


# ---------------------------------------------------------------------------
# verification margins
# ---------------------------------------------------------------------------

def verify_report(trace: InstanceTrace, report: RunReport) -> dict[str, float]:
    """Recompute every enabled inequality and return its margin.

    Margins named *_violation must stay <= 1e-9; *_margin entries are
    bound minus value and must stay nonnegative where the guarantee applies.
    """
    margins: dict[str, float] = {}
    if report.kind == "full_info":
        lam = float(report.meta["lam"])
        V = float(report.meta["V"])
        k = report.num_resources
        Q = report.queue
        g = report.consumptions
        Qprev = np.vstack([np.zeros((1, k)), Q[:-1]])
        drift = np.exp(lam * Q) - np.exp(lam * Qprev) - lam * np.exp(lam * Q) * g
        margins["drift_violation"] = float(drift.max())

        sign = 1.0 if trace.direction.is_convex else -1.0
        phi_T = float(np.sum(lam * np.exp(lam * Q[-1])))
        cap = trace.alpha * trace.G * (V + phi_T)
        worst = 0.0
        for t in range(report.horizon):
            x = report.actions[t]
            H = V * sign * np.asarray(trace.rounds[t].cost.subgrad(x), float)
            for i, gor in enumerate(trace.rounds[t].consumptions):
                H = H + lam * math.exp(lam * Q[t, i]) * np.asarray(gor.subgrad(x), float)
            worst = max(worst, float(np.linalg.norm(H)))
        margins["surrogate_norm_violation"] = worst - cap
    elif report.kind == "bandit":
        V = float(report.meta["V"])
        m = float(report.meta["m"])
        Q0 = float(report.terminal["Q0"])
        qprev = Q0
        worst = 0.0
        for t in range(report.horizon):
            expected = (
                V * float(report.costs[t])
                + math.e * m * qprev ** (m - 1.0) * float(report.consumptions[t, 0])
            )
            worst = max(worst, abs(expected - float(report.surrogate[t])))
            qprev += float(report.consumptions[t, 0])
        margins["measurability_violation"] = worst
        cap = V + math.e * m * float(report.queue[-1, 0]) ** (m - 1.0)
        margins["magnitude_violation"] = float(report.surrogate.max()) - cap
    return margins


# ---------------------------------------------------------------------------
# cells and experiments
# ---------------------------------------------------------------------------

SUMMARY_BASE = ["T", "seed", "regret", "regret_bound", "cc_bound", "bounds_enforced"]


@dataclass
class CellOutcome:
    T: int
    seed: int
    report: RunReport
    summary: dict
    ok: bool


@dataclass
class ExperimentOutcome:
    cells: list[CellOutcome]
    summary_rows: list[dict]
    ok: bool
    out_dir: Path
    files: list[Path] = field(default_factory=list)


def _run_cell(config: ExperimentConfig, T: int, seed: int) -> CellOutcome:
    B_T = config.budget_for(T)
    trace = build_instance(config.instance, T, B_T, _instance_seed(config, seed))
    report = run_learner(config, trace, seed)
    bench = oracle_mod.best_fixed_feasible(trace)
    regret = oracle_mod.regret_alpha(report, bench, trace.alpha, trace.direction)
    cc = oracle_mod.cumulative_consumption(report)

    D = trace.dset.diameter()
    if config.learner["name"] == "full_info":
        bounds = schedule_guarantees(
            trace.alpha, trace.G, D, T, trace.budget, trace.F, k=trace.num_resources
        )
        cc_values = [float(report.queue[-1, i]) for i in range(trace.num_resources)]
    else:
        K = trace.dset.dim
        bounds = bandit_mod.bandit_bounds(K, T, trace.budget)
        cc_values = [float(cc[0])]

    # the literal guarantees cover cost orientation against an exact benchmark
    enforced = trace.direction.is_convex and bench.method == "closed-form"
    pass_regret = regret <= bounds["regret_bound"] + VERIFY_TOL
    pass_cc = all(v <= bounds["cc_bound"] + VERIFY_TOL for v in cc_values)

    row = {
        "T": T,
        "seed": seed,
        "regret": regret,
        "regret_bound": bounds["regret_bound"],
        "cc_bound": bounds["cc_bound"],
        "bounds_enforced": float(enforced),
        "pass_regret": float(pass_regret),
        "pass_cc": float(pass_cc),
        "opt_value": bench.opt_value,
    }
    for i in range(trace.num_resources):
        row[f"cc_{i}"] = float(cc[i])

    ok = True
    if config.verify:
        margins = verify_report(trace, report)
        for name, value in margins.items():
            row[name] = value
            if name.endswith("_violation") and value > VERIFY_TOL:
                ok = False
        if enforced and not (pass_regret and pass_cc):
            ok = False
    report.terminal["regret"] = regret
    report.terminal["opt_value"] = bench.opt_value
    return CellOutcome(T=T, seed=seed, report=report, summary=row, ok=ok)


def _summary_columns(rows: list[dict]) -> list[str]:
    cols = list(SUMMARY_BASE)
    extra = sorted({k for row in rows for k in row} - set(cols))
    order = ["pass_regret", "pass_cc", "opt_value"]
    cols += [c for c in order if c in extra]
    cols += [c for c in extra if c not in order]
    return cols


def write_summary_csv(rows: list[dict], path) -> None:
    cols = _summary_columns(rows)
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(fmt(row.get(c, float("nan"))) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    """Execute every (horizon, seed) cell, write run CSVs and the summary."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells_spec = [(T, seed) for T in sorted(config.horizons) for seed in sorted(config.seeds)]

    if config.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            cells = list(pool.map(_run_cell, *zip(*[(config, T, s) for T, s in cells_spec])))
    else:
        cells = [_run_cell(config, T, s) for T, s in cells_spec]

    files = []
    family = config.instance.get("family", "linear")
    learner = config.learner["name"]
    for cell in cells:
        name = f"run_{family}_{learner}_T{cell.T}_seed{cell.seed}"
        csv_path = out_dir / f"{name}.csv"
        write_report_csv(cell.report, csv_path)
        files.append(csv_path)
        if config.plots:
            from . import plotting

            fig_path = out_dir / f"{name}.png"
            plotting.save_run_figure(cell.report, fig_path)
            files.append(fig_path)

    rows = [cell.summary for cell in cells]
    summary_path = out_dir / "summary.csv"
    write_summary_csv(rows, summary_path)
    files.append(summary_path)
    if config.plots and len(config.horizons) > 1:
        from . import plotting

        fig_path = out_dir / "summary_regret.png"
        plotting.save_summary_figure(rows, fig_path)
        files.append(fig_path)

    ok = all(cell.ok for cell in cells)
    return ExperimentOutcome(cells=cells, summary_rows=rows, ok=ok, out_dir=out_dir, files=files)


# ---------------------------------------------------------------------------
# scaling sweeps
# ---------------------------------------------------------------------------

@dataclass
class SlopeFit:
    slope: float
    half_width: float
    shifted: bool
    horizons: list[int]
    means: list[float]
    std_errs: list[float]


def fit_loglog_slope(horizons, regrets_per_horizon) -> SlopeFit:
    """Least-squares slope of log mean regret against log horizon.

    The confidence half-width propagates per-horizon seed variance through
    the regression weights (delta method, 1.96 sigma). Nonpositive means are
    shifted up to admit the log, and the fit is flagged.
    """
    horizons = [int(t) for t in horizons]
    means, ses = [], []
    for regrets in regrets_per_horizon:
        arr = np.asarray(list(regrets), dtype=float)
        means.append(float(arr.mean()))
        ses.append(float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0)
    means_arr = np.asarray(means)
    shifted = bool(means_arr.min() <= 0.0)
    if shifted:
        means_arr = means_arr - means_arr.min() + 1e-9 * max(1.0, float(np.abs(means_arr).max()))
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.log(means_arr)
    xc = x - x.mean()
    denom = float(xc @ xc)
    slope = float(xc @ (y - y.mean()) / denom)
    coeff = xc / denom
    var = float(np.sum((coeff * np.asarray(ses) / means_arr) ** 2))
    return SlopeFit(
        slope=slope,
        half_width=1.96 * math.sqrt(var),
        shifted=shifted,
        horizons=horizons,
        means=means,
        std_errs=ses,
    )


def sweep_scaling(config: ExperimentConfig) -> tuple[SlopeFit, ExperimentOutcome]:
    """Run the experiment grid and fit the regret growth exponent."""
    if len(config.horizons) < 3:
        raise ConfigError("scaling sweep needs at least three horizons")
    if len(config.seeds) < 10:
        raise ConfigError("scaling sweep needs at least ten seeds")
    outcome = run_experiment(config)
    horizons = sorted(config.horizons)
    per_h = [
        [row["regret"] for row in outcome.summary_rows if row["T"] == T] for T in horizons
    ]
    fit = fit_loglog_slope(horizons, per_h)
    path = outcome.out_dir / "scaling.csv"
    lines = ["T,mean_regret,std_err"]
    for T, mean, se in zip(fit.horizons, fit.means, fit.std_errs):
        lines.append(f"{T},{fmt(mean)},{fmt(se)}")
    lines.append(f"#slope {fmt(fit.slope)}")
    lines.append(f"#half_width {fmt(fit.half_width)}")
    lines.append(f"#shifted {int(fit.shifted)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    outcome.files.append(path)
    if config.plots:
        from . import plotting

        fig_path = outcome.out_dir / "scaling.png"
        plotting.save_scaling_figure(fit, fig_path)
        outcome.files.append(fig_path)
    return fit, outcome


# ---------------------------------------------------------------------------
# budget lower-bound experiment
# ---------------------------------------------------------------------------

def lowerbound_experiment(
    T: int, B_T: int, out_dir: str | None = None, plots: bool = False
) -> list[dict]:
    """Run the learner over the whole phased family and tabulate kappa-hat.

    One row per phase index tau: the exact fixed-action optimum, the exact
    stop-on-exhaustion optimum, realized regret and consumption, and the
    empirical budget factor next to ln T. The multiplicative-factor claim is
    asymptotic, so the table is informational rather than pass/fail.
    """
    probe = gen_bwk_lowerbound(T, B_T, tau=1)
    n_phases = probe.meta["num_phases"]
    rows = []
    for tau in range(1, n_phases + 1):
        trace = gen_bwk_lowerbound(T, B_T, tau=tau)
        report = run_full_info(trace)
        bench = oracle_mod.best_fixed_feasible(trace)
        regret = oracle_mod.regret_alpha(report, bench, trace.alpha, trace.direction)
        kappa_raw = oracle_mod.competitive_kappa(report, trace.budget)
        rows.append(
            {
                "tau": tau,
                "opt": bench.opt_value,
                "opt_stopped": bench.meta["opt_stopped"],
                "regret": regret,
                "cc": float(report.consumptions.sum()),
                # a negative multiplicative factor just means the additive
                # term already covers the consumption; floor it at zero
                "kappa_hat": max(0.0, kappa_raw),
                "kappa_raw": kappa_raw,
                "ln_T": math.log(trace.horizon),
            }
        )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["tau", "opt", "opt_stopped", "regret", "cc", "kappa_hat", "kappa_raw", "ln_T"]
        lines = [",".join(cols)]
        for row in rows:
            lines.append(",".join(fmt(row[c]) for c in cols))
        lines.append(f"#max_kappa_hat {fmt(max(r['kappa_hat'] for r in rows))}")
        with open(out / "lowerbound.csv", "w") as fh:
            fh.write("\n".join(lines) + "\n")
        if plots:
            from . import plotting

            plotting.save_lowerbound_figure(rows, out / "lowerbound.png")
    return rows

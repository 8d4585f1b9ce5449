"""Command line entry point.

Subcommands:
  run         execute the (horizon x seed) grid, write run CSVs + summary
  sweep       same grid, then fit the log-log regret growth exponent
  lowerbound  run the phased budget family and tabulate kappa-hat

Shared flags: --config PATH, --instance NAME, --learner NAME, --T LIST,
--budget RULE (sqrt[:coeff] | abs:value), --seeds LIST (comma or lo..hi),
--out DIR, --verify on|off, --plots on|off, --params k=v,... (dotted config
keys). The COLT_OUT_DIR environment variable supplies the default output
directory. Exit codes: 0 success, 1 verification failure, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    lowerbound_experiment,
    make_config,
    parse_kv_text,
    run_experiment,
    sweep_scaling,
)


def _add_shared_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--instance", help="instance family name")
    p.add_argument("--learner", help="learner name (full_info | bandit)")
    p.add_argument("--T", dest="horizons", help="comma-separated horizon list")
    p.add_argument("--budget", help="budget rule: sqrt[:coeff] or abs:value")
    p.add_argument("--seeds", help="seed list: 0,1,2 or 0..19")
    p.add_argument("--out", help="output directory")
    p.add_argument("--verify", choices=["on", "off"], help="toggle inequality checks")
    p.add_argument("--plots", choices=["on", "off"], help="toggle figure rendering")
    p.add_argument("--params", help="extra dotted config keys, k=v,...")


def _collect_kv(args: argparse.Namespace) -> dict[str, str]:
    kv: dict[str, str] = {}
    if args.config:
        with open(args.config) as fh:
            kv.update(parse_kv_text(fh.read()))
    if args.instance:
        kv["instance.family"] = args.instance
    if args.learner:
        kv["learner.name"] = args.learner
    if args.horizons:
        kv["run.horizons"] = args.horizons
    if args.budget:
        kv["run.budget"] = args.budget
    if args.seeds:
        kv["run.seeds"] = args.seeds
    if args.out:
        kv["run.out_dir"] = args.out
    if args.verify:
        kv["verify.enabled"] = args.verify
    if args.plots:
        kv["plots.enabled"] = args.plots
    if args.params:
        for pair in args.params.split(","):
            if not pair:
                continue
            if "=" not in pair:
                raise ConfigError(f"--params entries must be k=v, got {pair!r}")
            key, _, value = pair.partition("=")
            key = key.strip()
            if "." not in key:
                key = f"instance.{key}"
            kv[key] = value.strip()
    return kv


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="colt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "lowerbound"):
        _add_shared_flags(sub.add_parser(name))

    try:
        args = parser.parse_args(argv)
        kv = _collect_kv(args)
        config = make_config(kv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            outcome = run_experiment(config)
            print(f"wrote {len(outcome.files)} files to {outcome.out_dir}")
            if config.verify and not outcome.ok:
                print("verification FAILED; see summary.csv margins", file=sys.stderr)
                return 1
            return 0
        if args.command == "sweep":
            fit, outcome = sweep_scaling(config)
            flag = " (shifted)" if fit.shifted else ""
            print(
                f"slope {fit.slope:.4f} +- {fit.half_width:.4f}{flag} over T={fit.horizons}"
            )
            if config.verify and not outcome.ok:
                print("verification FAILED; see summary.csv margins", file=sys.stderr)
                return 1
            return 0
        # lowerbound
        if config.budget_rule[0] != "abs":
            raise ConfigError("lowerbound needs an absolute budget, e.g. --budget abs:100")
        T = config.horizons[0]
        rows = lowerbound_experiment(
            T, int(config.budget_rule[1]), out_dir=config.out_dir, plots=config.plots
        )
        worst = max(r["kappa_hat"] for r in rows)
        print(
            f"tau grid of {len(rows)}: max kappa-hat {worst:.4f} vs ln T {rows[0]['ln_T']:.4f}"
        )
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

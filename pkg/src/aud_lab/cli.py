"""Command-line experiment runner.

Verbs:
    sweep          parameter sweep over arrival and/or service rates
    nu-invariance  paired decision-rate comparison on one shared trace
    validate       run every oracle check against one simulated point

Flag values override config-file values.  ``--lambda`` / ``--mu`` / ``--nu``
accept a single number, a comma list, or ``start:stop:step``.
"""
from __future__ import annotations

import argparse
import sys

from .errors import AudLabError
from .experiments import (
    build_config,
    load_config_file,
    parse_rates,
    run_nu_invariance,
    run_sweep,
    run_validation,
)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--lambda", dest="arrival", help="arrival rate(s)")
    parser.add_argument("--mu", dest="service", help="service rate(s)")
    parser.add_argument("--nu", dest="decision", help="decision rate(s)")
    parser.add_argument("--updates", type=int, help="updates to simulate per point")
    parser.add_argument("--seed", type=int, help="base seed")
    parser.add_argument("--out", help="output CSV path")
    parser.add_argument("--confidence", type=float, help="CI confidence level")
    parser.add_argument("--allow-unstable", action="store_true", default=None,
                        help="simulate points with utilization >= 1 anyway")
    parser.add_argument("--periodic-decisions", action="store_true", default=None,
                        help="deterministic decision epochs at gap 1/nu instead of Poisson")


def _overrides(args: argparse.Namespace, mode: str | None) -> dict:
    out = {
        "arrival_rates": parse_rates(args.arrival) if args.arrival else None,
        "service_rates": parse_rates(args.service) if args.service else None,
        "decision_rates": parse_rates(args.decision) if args.decision else None,
        "n_updates": args.updates,
        "seed": args.seed,
        "output_path": args.out,
        "confidence": args.confidence,
        "allow_unstable": args.allow_unstable,
        "periodic": args.periodic_decisions,
    }
    if mode is not None:
        out["mode"] = mode
    return out


def _sweep_mode(file_values: dict, overrides: dict) -> str:
    """Choose the sweep flavor: explicit mode wins, else infer from grid shapes."""
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if merged.get("mode") in ("sweep_lambda", "sweep_mu", "grid_lambda_mu"):
        return merged["mode"]
    many_lam = len(merged.get("arrival_rates", ())) > 1
    many_mu = len(merged.get("service_rates", ())) > 1
    if many_lam and many_mu:
        return "grid_lambda_mu"
    if many_mu:
        return "sweep_mu"
    return "sweep_lambda"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="aud-lab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("sweep", "nu-invariance", "validate"):
        _add_common_flags(sub.add_parser(verb))
    args = parser.parse_args(argv)

    try:
        if args.verb == "sweep":
            overrides = _overrides(args, None)
            file_values = load_config_file(args.config) if args.config else {}
            overrides["mode"] = _sweep_mode(file_values, overrides)
            config = build_config(args.config, **overrides)
            result = run_sweep(config)
            print(f"wrote {len(result.rows)} rows"
                  + (f" to {config.output_path}" if config.output_path else ""))
            return 0
        if args.verb == "nu-invariance":
            config = build_config(args.config, **_overrides(args, "nu_invariance"))
            result = run_nu_invariance(config)
            for rate in sorted(result.estimates):
                est = result.estimates[rate]
                print(f"nu={rate:g}: mean age {est.mean:.6g} +/- {est.half_width:.6g}")
            print(f"max pairwise difference {result.max_pairwise_diff:.6g} "
                  f"(allowance {result.max_pairwise_allowance:.6g}); "
                  + ("consistent" if result.consistent else "INCONSISTENT"))
            return 0 if result.consistent else 1
        config = build_config(args.config, **_overrides(args, "validate"))
        report = run_validation(config)
        print(report.summary())
        return 0 if report.passed else 1
    except AudLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

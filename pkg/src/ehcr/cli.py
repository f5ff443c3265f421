"""Command-line entry point: ``ehcr <kind> [options]``."""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import KINDS, ExperimentSpec, parse_grid, run_experiment
from .scenario import generate_scenario, save_scenario


def _override(text):
    key, _, value = text.partition("=")
    if not key or not _:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ehcr",
        description="Energy-harvesting cognitive-radio resource allocation experiments.",
    )
    p.add_argument("kind", choices=KINDS + ("export-scenario",))
    p.add_argument("--seed", default="7", help="seed, list or range (1..20)")
    p.add_argument("--k", default="2", help="number of users, list or range")
    p.add_argument("--n", default="4", help="number of channels, list or range")
    p.add_argument("--m", type=int, default=1, help="number of primary users")
    p.add_argument("--eta", default="1", help="SE weight: value, list or start:step:stop")
    p.add_argument("--min-rate-coeff", default=None, help="min-rate slope: value, list or grid")
    p.add_argument("--solver", choices=("instant", "oracle"), default="instant")
    p.add_argument("--slots", type=int, default=10)
    p.add_argument("--harvest-model", choices=("deterministic-mean", "iid-random"),
                   default="deterministic-mean")
    p.add_argument("--out", default=None, help="output file (default: $EHCR_OUTPUT_DIR/<kind>.<format>)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--scenario-file", default=None, help="scenario JSON to use instead of generating")
    p.add_argument("--strict-oracle", action="store_true", help="joint grid search (K <= 3)")
    p.add_argument("--oracle-grid", type=int, default=128, help="mu grid points per user")
    p.add_argument("--set", dest="overrides", action="append", type=_override, default=[],
                   metavar="KEY=VALUE", help="scenario generation override (JSON value)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = dict(args.overrides)
    try:
        seeds = parse_grid(args.seed, int)
        ks = parse_grid(args.k, int)
        ns = parse_grid(args.n, int)
        etas = parse_grid(args.eta, float)
        coeffs = parse_grid(args.min_rate_coeff, float) if args.min_rate_coeff else None
    except ValueError as exc:
        print(f"ehcr: invalid grid: {exc}", file=sys.stderr)
        return 2

    if args.kind == "export-scenario":
        if not args.out:
            print("ehcr: export-scenario needs --out", file=sys.stderr)
            return 2
        extra = {"eta": etas[0]}
        if coeffs:
            extra["min_rate_coeff"] = coeffs[0]
        s = generate_scenario(seeds[0], ks[0], ns[0], args.m, {**overrides, **extra})
        save_scenario(s, args.out)
        return 0

    if coeffs and args.kind != "minrate-eta-surface":
        overrides["min_rate_coeff"] = coeffs[0]
    spec = ExperimentSpec(
        kind=args.kind, seeds=seeds, K=ks, N=ns, M=args.m, eta=etas,
        min_rate_coeff=coeffs if args.kind == "minrate-eta-surface" else None,
        solver=args.solver, slots=args.slots, harvest_model=args.harvest_model,
        out=args.out, format=args.format, scenario_file=args.scenario_file,
        strict_oracle=args.strict_oracle, oracle_grid=args.oracle_grid, overrides=overrides,
    )
    status = run_experiment(spec)
    if status:
        with open(str(spec.output_path()) + ".manifest.json") as fh:
            print(f"ehcr: {json.load(fh)['error']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

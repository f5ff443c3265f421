"""Experiment runners behind the command-line front end.

Every run writes one data file (CSV or JSON) plus ``<out>.manifest.json``
holding the full experiment spec, the library version and a status marker.
Rows depend only on the spec, so a run can be replayed from its manifest.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InstanceTooLarge, InvalidScenario, ModelError
from .instant import solve_instant
from .oracle import OracleConfig, solve_oracle
from .report import gap
from .scenario import generate_scenario, load_scenario
from .simulator import CSV_COLUMNS as SIM_COLUMNS
from .simulator import SimConfig, records_to_rows, run_simulation

KINDS = ("eta-sweep", "kn-scaling", "minrate-eta-surface", "instant-vs-oracle", "timing", "simulate")
OUTPUT_DIR_ENV = "EHCR_OUTPUT_DIR"


def parse_grid(text, cast=float) -> list:
    """Parse ``start:step:stop``, ``a..b`` (integers) or a comma list."""
    text = str(text).strip()
    if ":" in text:
        start, step, stop = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError(f"grid step must be positive: {text!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [cast(round(start + i * step, 12)) for i in range(count)]
    if ".." in text:
        lo, hi = (int(x) for x in text.split(".."))
        return [cast(v) for v in range(lo, hi + 1)]
    values = [cast(x) for x in text.split(",") if x.strip()]
    if not values:
        raise ValueError("empty grid")
    return values


@dataclass
class ExperimentSpec:
    kind: str
    seeds: list = field(default_factory=lambda: [7])
    K: list = field(default_factory=lambda: [2])
    N: list = field(default_factory=lambda: [4])
    M: int = 1
    eta: list = field(default_factory=lambda: [1.0])
    min_rate_coeff: list | None = None
    solver: str = "instant"
    slots: int = 10
    harvest_model: str = "deterministic-mean"
    out: str | None = None
    format: str = "csv"
    scenario_file: str | None = None
    strict_oracle: bool = False
    oracle_grid: int = 128
    overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidScenario(f"unknown experiment kind {self.kind!r}")
        for name in ("seeds", "K", "N", "eta"):
            if not getattr(self, name):
                raise InvalidScenario(f"grid {name!r} is empty")
        if self.min_rate_coeff is not None and not self.min_rate_coeff:
            raise InvalidScenario("grid 'min_rate_coeff' is empty")
        if self.format not in ("csv", "json"):
            raise InvalidScenario("format must be csv or json")
        if self.solver not in ("instant", "oracle"):
            raise InvalidScenario("solver must be instant or oracle")
        needs_oracle = self.kind == "instant-vs-oracle" or (
            self.kind in ("eta-sweep", "kn-scaling", "minrate-eta-surface", "simulate")
            and self.solver == "oracle"
        )
        if needs_oracle and self.scenario_file is None:
            cap = OracleConfig().max_assignments
            for k in self.K:
                for n in self.N:
                    if k ** n > cap:
                        raise InstanceTooLarge(f"oracle request K={k}, N={n}: {k ** n} > {cap}")

    def output_path(self) -> Path:
        if self.out:
            return Path(self.out)
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "results"))
        return base / f"{self.kind}.{self.format}"


# --------------------------------------------------------------------------

def _scenario(spec: ExperimentSpec, seed, K, N, **extra):
    if spec.scenario_file:
        s = load_scenario(spec.scenario_file)
        changes = {}
        if "eta" in extra:
            changes["eta"] = extra["eta"]
        if "min_rate_coeff" in extra:
            changes["min_rate_coeff"] = extra["min_rate_coeff"]
        return s.replace(**changes) if changes else s
    return generate_scenario(seed, K, N, spec.M, {**spec.overrides, **extra})


def _oracle_config(spec: ExperimentSpec) -> OracleConfig:
    return OracleConfig(mu_grid_points=spec.oracle_grid, strict=spec.strict_oracle)


def _solve(spec, scenario):
    if spec.solver == "oracle":
        return solve_oracle(scenario, _oracle_config(spec))[1]
    return solve_instant(scenario)[1]


def _eta_sweep(spec):
    for seed in spec.seeds:
        for K in spec.K:
            for N in spec.N:
                for eta in spec.eta:
                    s = _scenario(spec, seed, K, N, eta=eta)
                    r = _solve(spec, s)
                    o = r.objective
                    row = {"eta": eta, "K": s.K, "N": s.N, "seed": seed, "total": o.total,
                           "ee_total": o.ee_total, "se_total": o.se_total,
                           "feasible": r.feasible}
                    for k in range(s.K):
                        row[f"rate_{k}"] = o.rate_per_user[k]
                        row[f"floor_{k}"] = s.rate_floor[k]
                        row[f"ee_{k}"] = o.ee_per_user[k]
                        row[f"se_{k}"] = o.se_per_user[k]
                        row[f"tail_{k}"] = o.tail_per_user[k]
                        row[f"mu_{k}"] = r.allocation.mu[k]
                    yield row


def _kn_scaling(spec):
    for K in spec.K:
        for N in spec.N:
            for seed in spec.seeds:
                s = _scenario(spec, seed, K, N, eta=spec.eta[0])
                r = _solve(spec, s)
                yield {"K": s.K, "N": s.N, "seed": seed, "eta": spec.eta[0],
                       "ee_total": r.objective.ee_total,
                       "ee_bits_per_joule": float(np.sum(r.objective.ee_raw_per_user)),
                       "total": r.total, "feasible": r.feasible}


def _minrate_surface(spec):
    coeffs = spec.min_rate_coeff or [0.1]
    for seed in spec.seeds:
        for c in coeffs:
            for eta in spec.eta:
                s = _scenario(spec, seed, spec.K[0], spec.N[0], eta=eta, min_rate_coeff=c)
                try:
                    r = _solve(spec, s)
                except ModelError as exc:
                    yield {"min_rate_coeff": c, "eta": eta, "seed": seed, "ee_total": None,
                           "total": None, "feasible": False, "status": type(exc).__name__}
                    continue
                yield {"min_rate_coeff": c, "eta": eta, "seed": seed,
                       "ee_total": r.objective.ee_total, "total": r.total,
                       "feasible": r.feasible, "status": r.status}


def _instant_vs_oracle(spec):
    for seed in spec.seeds:
        for K in spec.K:
            for N in spec.N:
                for eta in spec.eta:
                    s = _scenario(spec, seed, K, N, eta=eta)
                    ri = solve_instant(s)[1]
                    ro = solve_oracle(s, _oracle_config(spec))[1]
                    ee_i, ee_o = ri.objective.ee_total, ro.objective.ee_total
                    yield {"seed": seed, "K": s.K, "N": s.N, "eta": eta,
                           "instant_total": ri.total, "oracle_total": ro.total,
                           "gap_pct": gap(ri, ro),
                           "instant_ee": ee_i, "oracle_ee": ee_o,
                           "ee_ratio": ee_i / ee_o if ee_o else None,
                           "instant_feasible": ri.feasible, "oracle_feasible": ro.feasible}


def _timing(spec):
    cap = OracleConfig().max_assignments
    for K in spec.K:
        for N in spec.N:
            for seed in spec.seeds:
                s = _scenario(spec, seed, K, N, eta=spec.eta[0])
                ri = solve_instant(s)[1]
                row = {"K": s.K, "N": s.N, "seed": seed, "instant_seconds": ri.wall_clock,
                       "oracle_seconds": None, "ratio": None}
                if s.K ** s.N <= cap:
                    ro = solve_oracle(s, _oracle_config(spec))[1]
                    row["oracle_seconds"] = ro.wall_clock
                    row["ratio"] = ri.wall_clock / ro.wall_clock
                yield row


def _simulate(spec):
    for seed in spec.seeds:
        s = _scenario(spec, seed, spec.K[0], spec.N[0], eta=spec.eta[0])
        config = SimConfig(slots=spec.slots, seed=seed, harvest_model=spec.harvest_model,
                           solver=spec.solver, oracle_config=_oracle_config(spec))
        for row in records_to_rows(run_simulation(s, config)):
            yield dict(zip(SIM_COLUMNS, row), seed=seed)


RUNNERS = {
    "eta-sweep": _eta_sweep,
    "kn-scaling": _kn_scaling,
    "minrate-eta-surface": _minrate_surface,
    "instant-vs-oracle": _instant_vs_oracle,
    "timing": _timing,
    "simulate": _simulate,
}


# --------------------------------------------------------------------------
# output

def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def _plain(value):
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_rows(rows, path: Path, fmt: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump([{k: _plain(v) for k, v in r.items()} for r in rows], fh,
                      indent=1, sort_keys=False)
            fh.write("\n")
        return
    columns = []
    for r in rows:
        for c in r:
            if c not in columns:
                columns.append(c)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for r in rows:
            writer.writerow([format_value(r.get(c)) for c in columns])


def run_experiment(spec: ExperimentSpec) -> int:
    """Run ``spec``, write data and manifest; returns a process exit status."""
    path = spec.output_path()
    manifest = {"spec": asdict(spec), "version": __version__, "output": str(path),
                "status": "ok", "error": None, "rows": 0}
    rows = []
    status = 0
    try:
        spec.validate()
        for row in RUNNERS[spec.kind](spec):
            rows.append(row)
    except (ModelError, ValueError, OSError) as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        status = 1
    manifest["rows"] = len(rows)
    write_rows(rows, path, spec.format)
    with open(str(path) + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status

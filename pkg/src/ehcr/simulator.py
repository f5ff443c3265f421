"""Multi-slot operation: per-slot solve, harvest realization and residual-energy recursion.

Channel gains stay fixed across slots. At the start of each slot the
harvest rates are realized, every device that can afford sensing in this
slot and the next joins the allocation, and residual energies are carried
forward with E_res' = E_res + E_har - E_tr - E_sen.

Devices that cannot take part are dormant for the slot: they neither sense
nor transmit and harvest for the whole data slot.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .energy import ledger_for_device, raw_min_harvesting_ratio
from .errors import ModelError
from .instant import solve_instant
from .oracle import OracleConfig, solve_oracle
from .scenario import Scenario

HARVEST_MODELS = ("deterministic-mean", "iid-random")
SOLVERS = ("instant", "oracle")


@dataclass(frozen=True)
class SimConfig:
    slots: int = 10
    seed: int = 0
    harvest_model: str = "deterministic-mean"
    # iid-random draws rho uniformly on [1 - spread, 1 + spread] * rho_av
    harvest_spread: float = 0.5
    buffer_arrivals: bool = False
    solver: str = "instant"
    oracle_config: OracleConfig | None = None

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError("slots must be at least 1")
        if self.harvest_model not in HARVEST_MODELS:
            raise ValueError(f"harvest_model must be one of {HARVEST_MODELS}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if not 0 <= self.harvest_spread <= 1:
            raise ValueError("harvest_spread must lie in [0, 1]")


@dataclass
class DeviceSlot:
    device: int
    E_res_start: float
    rho: float
    mu: float
    E_har: float
    E_tr: float
    E_sen: float  # sensing energy spent this slot, 0 when dormant
    E_res_end: float
    rate: float
    dormant: bool
    buffer_bits: float | None = None
    served_bits: float | None = None


@dataclass
class SlotRecord:
    slot: int
    devices: list = field(default_factory=list)
    objective: float | None = None
    feasible: bool = False
    status: str = "ok"
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _draw_buffer(rng, dist):
    if hasattr(dist, "lam"):
        return float(rng.exponential(1.0 / dist.lam))
    return float(rng.uniform(dist.a, dist.b))


def _solve(scenario, config):
    if config.solver == "oracle":
        allocation, report = solve_oracle(scenario, config.oracle_config)
    else:
        allocation, report, _ = solve_instant(scenario)
    return allocation, report


def run_simulation(scenario: Scenario, config: SimConfig) -> list:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed % 2**64, 2]))
    timing = scenario.timing
    E_res = scenario.E_res.copy()
    records = []

    for t in range(config.slots):
        if config.harvest_model == "iid-random":
            s = config.harvest_spread
            rho = scenario.rho * rng.uniform(1.0 - s, 1.0 + s, size=scenario.K)
        else:
            rho = scenario.rho.copy()
        bits = None
        if config.buffer_arrivals:
            bits = [_draw_buffer(rng, d.buffer) for d in scenario.devices]

        devices = [
            replace(d, E_res=float(E_res[k]), rho_av=float(rho[k]))
            for k, d in enumerate(scenario.devices)
        ]
        active = [
            k for k, d in enumerate(devices)
            if d.E_res >= d.E_sen and raw_min_harvesting_ratio(d, timing) < 1.0
        ]
        record = SlotRecord(slot=t)
        mu = {k: 1.0 for k in range(scenario.K)}
        transmit = {}
        rates = {}

        if active:
            sub = scenario.with_devices([devices[k] for k in active])
            try:
                allocation, report = _solve(sub, config)
            except ModelError as exc:
                record.status = "error"
                record.error = f"{type(exc).__name__}: {exc}"
            else:
                record.objective = report.total
                record.feasible = report.feasible
                record.status = report.status
                for j, k in enumerate(active):
                    mu[k] = float(allocation.mu[j])
                    transmit[k] = True
                    rates[k] = float(report.objective.rate_per_user[j])
        else:
            record.status = "all-dormant"

        for k, d in enumerate(devices):
            dormant = k not in active
            if transmit.get(k):
                ledger = ledger_for_device(d, mu[k], timing)
                E_har, E_tr, E_sen = ledger.E_har, ledger.E_tr, d.E_sen
            else:
                E_har, E_tr = d.rho_av * mu[k] * timing.T_d, 0.0
                E_sen = 0.0 if dormant else d.E_sen
            E_end = d.E_res + E_har - E_tr - E_sen
            row = DeviceSlot(
                device=d.id, E_res_start=d.E_res, rho=d.rho_av, mu=mu[k],
                E_har=E_har, E_tr=E_tr, E_sen=E_sen, E_res_end=E_end,
                rate=rates.get(k, 0.0), dormant=dormant,
            )
            if bits is not None:
                row.buffer_bits = bits[k]
                delivered = row.rate * (1.0 - mu[k]) * timing.T_d
                row.served_bits = min(bits[k], delivered)
            record.devices.append(row)
            E_res[k] = E_end
        records.append(record)
    return records


CSV_COLUMNS = [
    "slot", "device", "dormant", "E_res_start", "rho", "mu", "E_har", "E_tr",
    "E_sen", "E_res_end", "rate", "buffer_bits", "served_bits",
    "objective", "feasible", "status",
]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def records_to_rows(records) -> list:
    rows = []
    for rec in records:
        for dev in rec.devices:
            row = asdict(dev)
            row.update(slot=rec.slot, objective=rec.objective, feasible=rec.feasible,
                       status=rec.status)
            rows.append([_fmt(row[c]) for c in CSV_COLUMNS])
    return rows


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(records_to_rows(records))
    return buf.getvalue()


def records_to_json(records) -> str:
    return json.dumps([r.to_dict() for r in records], sort_keys=True)

"""Solver output shared by INSTANT and the exhaustive oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import MismatchedScenario
from .objective import FeasibilityReport, ObjectiveBreakdown
from .scenario import Allocation


@dataclass
class SolveReport:
    solver: str
    scenario_id: str
    allocation: Allocation
    objective: ObjectiveBreakdown
    feasibility: FeasibilityReport
    evaluations: int = 0
    status: str = "ok"
    wall_clock: float = 0.0
    # objective change across one mu-grid step (oracle only)
    grid_tolerance: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.objective.total

    @property
    def feasible(self) -> bool:
        return self.feasibility.feasible

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "solver": self.solver,
            "scenario_id": self.scenario_id,
            "status": self.status,
            "feasible": self.feasible,
            "allocation": self.allocation.to_dict(),
            "assignment": [int(k) for k in self.allocation.assignment],
            "objective": self.objective.to_dict(),
            "feasibility": self.feasibility.to_dict(),
            "evaluations": self.evaluations,
            "grid_tolerance": self.grid_tolerance,
            "extra": self.extra,
        }
        if include_timing:
            out["wall_clock"] = self.wall_clock
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True)


def gap(instant_report: SolveReport, oracle_report: SolveReport) -> float:
    """Relative shortfall of INSTANT against the oracle, in percent.

    Slightly negative values are possible because the oracle searches a
    grid; they are clamped at minus the oracle's grid tolerance.
    """
    if instant_report.scenario_id != oracle_report.scenario_id:
        raise MismatchedScenario(
            f"{instant_report.scenario_id} vs {oracle_report.scenario_id}"
        )
    best = oracle_report.total
    if best == instant_report.total:
        return 0.0
    pct = 100.0 * (best - instant_report.total) / best
    floor = -100.0 * oracle_report.grid_tolerance / abs(best)
    return max(pct, floor)

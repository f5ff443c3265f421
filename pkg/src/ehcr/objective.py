"""EE and SE terms, the combined objective, and C1-C8 feasibility checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import harvested_energy, max_transmit_energy
from .errors import DegenerateDenominator
from .scenario import EPS, Allocation, ExponentialBuffer, Scenario, UniformBuffer
from .throughput import bits_for_rate, channel_rates

# relative tolerance when judging a constraint satisfied; absorbs last-ulp
# differences between vectorized and scalar evaluation of the same point
FEAS_RTOL = 1e-9


# --------------------------------------------------------------------------
# building blocks

def consumption(scenario: Scenario, k: int, mu):
    """EE denominator rho*mu*T_d + E_res - E_sen + E_idle (Joules)."""
    return (
        harvested_energy(scenario.rho[k], mu, scenario.timing.T_d)
        + scenario.E_res[k] - scenario.E_sen[k] + scenario.E_idle[k]
    )


def tail_probability(dist, bits):
    """P(X >= bits) for the buffer occupancy distribution."""
    bits = np.asarray(bits, dtype=float)
    if isinstance(dist, UniformBuffer):
        out = np.clip((dist.b - bits) / (dist.b - dist.a), 0.0, 1.0)
    elif isinstance(dist, ExponentialBuffer):
        out = np.exp(-dist.lam * np.maximum(bits, 0.0))
    else:
        raise TypeError(f"unsupported buffer distribution {dist!r}")
    return out if out.ndim else float(out)


def user_terms(scenario: Scenario, k: int, held, mu):
    """Rate, raw EE, tail probability and SE term of user ``k`` over ``mu``.

    ``held`` lists the user's channels; ``mu`` may be scalar or an array.
    """
    mu = np.asarray(mu, dtype=float)
    held = np.asarray(held, dtype=int)
    if held.size:
        R = channel_rates(scenario, k, mu)[..., held].sum(axis=-1)
    else:
        R = np.zeros_like(mu)
    ee = R / consumption(scenario, k, mu)
    tail = tail_probability(scenario.devices[k].buffer, bits_for_rate(scenario, R, mu))
    se = scenario.eta[k] * tail
    return R, ee, tail, se


def contribution(scenario: Scenario, k: int, held, mu):
    """User ``k``'s share of the objective: EE / ee_unit + SE."""
    R, ee, tail, se = user_terms(scenario, k, held, mu)
    return ee / scenario.ee_unit + se


# --------------------------------------------------------------------------
# public per-user terms

def energy_efficiency(allocation: Allocation, k: int, scenario: Scenario) -> float:
    """Rate over per-slot consumption, bits/s/Joule."""
    mu = allocation.mu[k]
    denom = consumption(scenario, k, mu)
    if denom <= 0:
        raise DegenerateDenominator(f"user {k}: consumption {denom} <= 0")
    R, _, _, _ = user_terms(scenario, k, np.nonzero(allocation.g[k])[0], mu)
    return float(R / denom)


def se_term(allocation: Allocation, k: int, scenario: Scenario) -> float:
    _, _, _, se = user_terms(scenario, k, np.nonzero(allocation.g[k])[0], allocation.mu[k])
    return float(se)


def pu_interference(allocation: Allocation | None, k: int, m: int, scenario: Scenario) -> float:
    """Sensing-weighted interference factor I_{k,m}, Watts at PU ``m`` per Watt sent.

    Sums over every sensed channel, so it does not depend on the assignment.
    """
    return float(scenario.pu_factor[k, m])


def transmit_powers(scenario: Scenario, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    out = np.empty(scenario.K)
    for k, d in enumerate(scenario.devices):
        if mu[k] >= 1.0:
            out[k] = np.inf
        else:
            out[k] = max_transmit_energy(d, mu[k], scenario.timing) / ((1.0 - mu[k]) * scenario.timing.T_d)
    return out


# --------------------------------------------------------------------------
# evaluation

@dataclass
class ObjectiveBreakdown:
    ee_per_user: np.ndarray  # objective units (EE / ee_unit)
    se_per_user: np.ndarray
    total: float
    rate_per_user: np.ndarray
    ee_raw_per_user: np.ndarray  # bits/s/J
    tail_per_user: np.ndarray

    @property
    def ee_total(self) -> float:
        return float(np.sum(self.ee_per_user))

    @property
    def se_total(self) -> float:
        return float(np.sum(self.se_per_user))

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "ee_per_user": [float(x) for x in self.ee_per_user],
            "se_per_user": [float(x) for x in self.se_per_user],
            "rate_per_user": [float(x) for x in self.rate_per_user],
            "ee_bits_per_joule": [float(x) for x in self.ee_raw_per_user],
            "tail_per_user": [float(x) for x in self.tail_per_user],
        }


def evaluate(allocation: Allocation, scenario: Scenario) -> ObjectiveBreakdown:
    K = scenario.K
    R = np.zeros(K)
    ee_raw = np.zeros(K)
    tail = np.zeros(K)
    se = np.zeros(K)
    for k in range(K):
        if consumption(scenario, k, allocation.mu[k]) <= 0:
            raise DegenerateDenominator(f"user {k}: non-positive consumption")
        held = np.nonzero(allocation.g[k])[0]
        R[k], ee_raw[k], tail[k], se[k] = (
            float(x) for x in user_terms(scenario, k, held, allocation.mu[k])
        )
    ee = ee_raw / scenario.ee_unit
    return ObjectiveBreakdown(
        ee_per_user=ee,
        se_per_user=se,
        total=float(np.sum(ee + se)),
        rate_per_user=R,
        ee_raw_per_user=ee_raw,
        tail_per_user=tail,
    )


@dataclass
class ConstraintStatus:
    name: str
    slack: float
    satisfied: bool
    per_item: list = field(default_factory=list)
    unit: str = ""

    def to_dict(self) -> dict:
        return {
            "slack": self.slack,
            "satisfied": self.satisfied,
            "per_item": [float(x) for x in self.per_item],
            "unit": self.unit,
        }


@dataclass
class FeasibilityReport:
    constraints: dict

    @property
    def feasible(self) -> bool:
        return all(c.satisfied for c in self.constraints.values())

    def __getitem__(self, name) -> ConstraintStatus:
        return self.constraints[name]

    def violated(self) -> list:
        return [n for n, c in self.constraints.items() if not c.satisfied]

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "constraints": {n: c.to_dict() for n, c in self.constraints.items()},
        }


def _status(name, items, scale, unit):
    items = np.asarray(items, dtype=float)
    slack = float(items.min()) if items.size else 0.0
    scale = np.broadcast_to(np.asarray(scale, dtype=float), items.shape)
    ok = bool(np.all(items >= -FEAS_RTOL * np.abs(scale))) if items.size else True
    return ConstraintStatus(name, slack, ok, items.tolist(), unit)


def check_feasibility(allocation: Allocation, scenario: Scenario) -> FeasibilityReport:
    K, timing = scenario.K, scenario.timing
    mu = allocation.mu
    g = allocation.g
    inside = (mu > 0) & (mu < 1)

    budget = np.array([
        max_transmit_energy(d, mu[k], timing) for k, d in enumerate(scenario.devices)
    ])
    rates = np.zeros(K)
    for k in range(K):
        held = np.nonzero(g[k])[0]
        if held.size and inside[k]:
            rates[k] = float(user_terms(scenario, k, held, mu[k])[0])

    c1 = rates - scenario.rate_floor
    c2 = np.minimum(budget, 0.0)
    c3 = scenario.E_max_ap - timing.T_d * float(np.sum(scenario.rho * mu))
    P_tr = transmit_powers(scenario, mu)
    with np.errstate(invalid="ignore"):
        load = (P_tr[:, None] * scenario.pu_factor).sum(axis=0) if scenario.M else np.zeros(0)
    load = np.where(np.isnan(load), np.inf, load)
    c4 = scenario.I_th - load
    column_sums = g.sum(axis=0)
    c5 = -np.count_nonzero(column_sums != 1)
    c6 = -np.count_nonzero((g != 0) & (g != 1))
    c7 = budget
    c8 = np.minimum(mu, 1.0 - mu) - EPS

    constraints = {
        "C1": _status("C1", c1, scenario.rate_floor, "bits/s"),
        "C2": _status("C2", c2, scenario.E_sen, "J"),
        "C3": _status("C3", [c3], scenario.E_max_ap, "J"),
        "C4": _status("C4", c4, scenario.I_th, "W"),
        "C5": _status("C5", [c5], 0.0, "count"),
        "C6": _status("C6", [c6], 0.0, "count"),
        "C7": _status("C7", c7, scenario.E_sen, "J"),
        "C8": _status("C8", c8, 0.0, "ratio"),
    }
    return FeasibilityReport(constraints)

"""INSTANT: greedy channel allocation followed by per-user harvesting-ratio tuning."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .energy import max_transmit_energy, min_harvesting_ratio
from .errors import InfeasibleScenario
from .objective import check_feasibility, evaluate, tail_probability
from .report import SolveReport
from .scenario import EPS, Allocation, Scenario, UniformBuffer
from .search import grid_golden_max
from .throughput import LN2, channel_rates

GRID_POINTS = 256
MU_TOL = 1e-6


@dataclass
class SolverTrace:
    channel_events: list = field(default_factory=list)  # one per channel
    mu_decisions: list = field(default_factory=list)  # one per user
    channel_evaluations: int = 0
    mu_evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "channel_events": self.channel_events,
            "mu_decisions": self.mu_decisions,
            "channel_evaluations": self.channel_evaluations,
            "mu_evaluations": self.mu_evaluations,
        }


def initial_ratios(scenario: Scenario) -> np.ndarray:
    mu_min = np.array([min_harvesting_ratio(d, scenario.timing) for d in scenario.devices])
    return (mu_min + 1.0) / 2.0


def _mu_bounds(scenario: Scenario, k: int):
    mu_min = min_harvesting_ratio(scenario.devices[k], scenario.timing)
    hi = 1.0 - EPS
    return min(mu_min + EPS, hi), hi


def _power(scenario: Scenario, k: int, mu):
    d = scenario.devices[k]
    return max_transmit_energy(d, mu, scenario.timing) / ((1.0 - mu) * scenario.timing.T_d)


def _gate_terms(scenario: Scenario, mu_current: np.ndarray, k: int):
    """C3 and C4 loads of every user other than ``k``."""
    others = np.arange(scenario.K) != k
    e_others = scenario.timing.T_d * float(np.sum(scenario.rho[others] * mu_current[others]))
    p_others = np.array([_power(scenario, l, mu_current[l]) for l in np.nonzero(others)[0]])
    i_others = (p_others[:, None] * scenario.pu_factor[others]).sum(axis=0) if p_others.size \
        else np.zeros(scenario.M)
    return e_others, i_others


class _UserModel:
    """User ``k``'s contribution and C1/C3/C4 gates with its channels fixed.

    ``values`` works on arrays; ``value`` is the same computation on plain
    floats, used for the golden-section steps where array overhead dominates.
    """

    def __init__(self, scenario: Scenario, k: int, held, e_others, i_others):
        d = scenario.devices[k]
        t = scenario.timing
        self.s, self.k = scenario, k
        self.H = np.asarray(scenario.H[k][np.asarray(held, dtype=int)], dtype=float)
        self.H_list = [float(h) for h in self.H]
        self.E_res, self.E_sen, self.rho = float(d.E_res), float(d.E_sen), float(d.rho_av)
        self.E_idle = float(scenario.E_idle[k])
        self.T, self.T_d = t.T, t.T_d
        self.scale = scenario.B if scenario.rate_includes_bandwidth else 1.0
        self.floor = float(scenario.rate_floor[k])
        self.eta = float(scenario.eta[k])
        self.e_others = float(e_others)
        self.i_others = np.asarray(i_others, dtype=float)
        self.pu = np.asarray(scenario.pu_factor[k], dtype=float)
        # plain-float copies for the scalar path
        self.c4_terms = list(zip(self.i_others.tolist(), self.pu.tolist(),
                                 np.asarray(scenario.I_th, dtype=float).tolist()))
        self.buffer = d.buffer
        if isinstance(d.buffer, UniformBuffer):
            a, b = float(d.buffer.a), float(d.buffer.b)
            self.tail = lambda x: min(1.0, max(0.0, (b - x) / (b - a)))
        else:
            lam = float(d.buffer.lam)
            self.tail = lambda x: math.exp(-lam * max(x, 0.0))
        self.slot_total = scenario.bits_definition == "slot_total"

    def _split(self, mu):
        e_tr = self.E_res + self.rho * mu * self.T_d - 2.0 * self.E_sen
        t_tr = (1.0 - mu) * self.T_d
        return e_tr, t_tr

    def values(self, mu, gated=True):
        mu = np.asarray(mu, dtype=float)
        s = self.s
        e_tr, t_tr = self._split(mu)
        if self.H.size:
            snr = self.H * (np.maximum(e_tr, 0.0) / t_tr)[..., None]
            R = (t_tr / self.T * self.scale)[..., None] * np.log1p(snr) / LN2
            R = R.sum(axis=-1)
        else:
            R = np.zeros_like(mu)
        denom = self.rho * mu * self.T_d + self.E_res - self.E_sen + self.E_idle
        bits = R * (self.T if self.slot_total else t_tr)
        c = R / denom / s.ee_unit + self.eta * tail_probability(self.buffer, bits)
        if not gated:
            return c
        ok = (R >= self.floor) & (self.e_others + self.T_d * self.rho * mu <= s.E_max_ap)
        if s.M:
            load = self.i_others + (e_tr / t_tr)[..., None] * self.pu
            ok &= np.all(load <= s.I_th, axis=-1)
        return np.where(ok, c, -np.inf)

    def value(self, mu: float, gated=True) -> float:
        e_tr, t_tr = self._split(mu)
        e_pos = max(e_tr, 0.0)
        factor = t_tr / self.T * self.scale
        R = 0.0
        for h in self.H_list:
            R += factor * math.log1p(h * (e_pos / t_tr)) / LN2
        if gated and not all(self.gates(mu, R)):
            return -math.inf
        return self.score(mu, R)

    def score(self, mu: float, R: float) -> float:
        """Ungated contribution at ratio ``mu`` for a given total rate ``R``."""
        denom = self.rho * mu * self.T_d + self.E_res - self.E_sen + self.E_idle
        bits = R * (self.T if self.slot_total else (1.0 - mu) * self.T_d)
        return R / denom / self.s.ee_unit + self.eta * self.tail(bits)

    def rate(self, mu: float) -> float:
        e_tr, t_tr = self._split(mu)
        factor = t_tr / self.T * self.scale
        e_pos = max(e_tr, 0.0)
        return sum(factor * math.log1p(h * (e_pos / t_tr)) / LN2 for h in self.H_list)

    def gates(self, mu: float, R=None):
        """(C1, C3, C4) for a single ratio."""
        s = self.s
        if R is None:
            R = self.rate(mu)
        e_tr, t_tr = self._split(mu)
        c1 = R >= self.floor
        c3 = self.e_others + self.T_d * self.rho * mu <= s.E_max_ap
        p = e_tr / t_tr
        c4 = all(i + p * f <= th for i, f, th in self.c4_terms)
        return bool(c1), bool(c3), c4


def _local_search(scenario, allocation, k, constrained=True, points=GRID_POINTS, tol=MU_TOL,
                  model=None):
    if model is None:
        held = np.nonzero(allocation.g[k])[0]
        model = _UserModel(scenario, k, held, *_gate_terms(scenario, allocation.mu, k))
    lo, hi = _mu_bounds(scenario, k)
    if constrained:
        mu, value, evals = grid_golden_max(model.values, lo, hi, points, tol, scalar=model.value)
        if np.isfinite(value):
            return mu, evals, True
    free = lambda m: model.values(m, gated=False)  # noqa: E731
    mu, value, more = grid_golden_max(
        free, lo, hi, points, tol, scalar=lambda m: model.value(m, gated=False))
    return mu, (evals + more) if constrained else more, False


def optimize_mu_local(scenario: Scenario, allocation: Allocation, k: int,
                      constrained: bool = True) -> float:
    """Best harvesting ratio for user ``k`` with its channels and the others' ratios fixed.

    Maximizes the user's EE + SE contribution on [mu_min + eps, 1 - eps].
    With ``constrained`` the search only considers ratios passing the C1, C3
    and C4 gates; if none does, the unconstrained maximizer is returned.
    """
    return _local_search(scenario, allocation, k, constrained)[0]


def solve_instant(scenario: Scenario, raise_on_infeasible: bool = False):
    """Run INSTANT; returns ``(allocation, report, trace)``."""
    start = time.perf_counter()
    K, N = scenario.K, scenario.N
    floor = scenario.rate_floor
    mu = initial_ratios(scenario)
    trace = SolverTrace()

    rates = np.stack([channel_rates(scenario, k, mu[k]) for k in range(K)])
    g = np.zeros((K, N), dtype=np.int8)
    R = np.zeros(K)

    # channel allocation, pass 1: reach every user's minimum rate
    pending = list(range(K))
    leftover = []
    for n in range(N):
        if not pending:
            leftover.append(n)
            continue
        # the pending user with the best rate on this channel
        candidate = rates[pending, n]
        trace.channel_evaluations += len(pending)
        k_hat = pending[int(np.argmax(candidate))]
        g[k_hat, n] = 1
        R[k_hat] += rates[k_hat, n]
        trace.channel_events.append(
            {"channel": n, "user": k_hat, "rate": float(R[k_hat]), "pass": "min-rate"}
        )
        if R[k_hat] >= floor[k_hat]:
            pending.remove(k_hat)

    # pass 2: remaining channels go to the user with the best objective
    held = [list(np.nonzero(g[k])[0]) for k in range(K)]
    scorers = [_UserModel(scenario, k, [], 0.0, np.zeros(scenario.M)) for k in range(K)]
    share = np.array([scorers[k].score(mu[k], R[k]) for k in range(K)])
    for n in leftover:
        best_k, best_o = -1, -np.inf
        total = float(share.sum())
        for k in range(K):
            o = total - share[k] + scorers[k].score(mu[k], R[k] + rates[k, n])
            trace.channel_evaluations += 1
            if o > best_o:
                best_k, best_o = k, o
        g[best_k, n] = 1
        held[best_k].append(n)
        share[best_k] = scorers[best_k].score(mu[best_k], R[best_k] + rates[best_k, n])
        R[best_k] += rates[best_k, n]
        trace.channel_events.append(
            {"channel": n, "user": best_k, "rate": float(R[best_k]), "pass": "marginal",
             "objective": best_o}
        )

    allocation = Allocation(g, mu.copy())
    objective_before = evaluate(allocation, scenario).total

    # harvesting-ratio tuning, lowest harvest rate first
    order = sorted(range(K), key=lambda k: (scenario.rho[k], k))
    for k in order:
        mu_before = float(allocation.mu[k])
        model = _UserModel(scenario, k, held[k], *_gate_terms(scenario, allocation.mu, k))
        mu_hat, evals, _ = _local_search(scenario, allocation, k, model=model)
        trace.mu_evaluations += evals
        c1, c3, c4 = model.gates(mu_hat)
        ok_before = all(model.gates(mu_before))
        gain = model.value(mu_hat, gated=False) - model.value(mu_before, gated=False)
        reason = None
        if not c1:
            reason = "C1"
        elif not c3:
            reason = "C3"
        elif not c4:
            reason = "C4"
        elif ok_before and gain < 0:
            reason = "no-improvement"
        accepted = reason is None
        if accepted:
            allocation.mu[k] = mu_hat
        trace.mu_decisions.append({
            "user": k, "mu_before": mu_before, "mu_candidate": float(mu_hat),
            "accepted": accepted, "reason": reason, "gain": gain,
            "feasible_before": ok_before,
        })

    objective = evaluate(allocation, scenario)
    feasibility = check_feasibility(allocation, scenario)
    status = "ok" if feasibility.feasible else "infeasible:" + ",".join(feasibility.violated())
    report = SolveReport(
        solver="instant",
        scenario_id=scenario.identity,
        allocation=allocation,
        objective=objective,
        feasibility=feasibility,
        evaluations=trace.channel_evaluations + trace.mu_evaluations,
        status=status,
        wall_clock=time.perf_counter() - start,
        extra={"objective_before_mu_phase": objective_before,
               "channel_evaluations": trace.channel_evaluations,
               "mu_evaluations": trace.mu_evaluations},
    )
    if raise_on_infeasible and not feasibility.feasible:
        raise InfeasibleScenario(f"INSTANT: {status}", allocation, report)
    return allocation, report, trace

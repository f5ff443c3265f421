"""Exhaustive reference solver for small instances.

Every one of the K**N complete channel assignments is scored. For a fixed
assignment the objective splits into per-user terms that depend only on the
user's channel subset and its own harvesting ratio; only the AP budget (C3)
and the PU interference limits (C4) couple users. The solver therefore

1. tabulates, for each user and each of the 2**N channel subsets, the user's
   contribution on a uniform mu grid and its best C1-feasible grid point;
2. scores all assignments at once from that table;
3. runs cyclic coordinate descent only for assignments whose independent
   per-user optima break C3 or C4.

Step 3 starts every user at its smallest C1-feasible ratio. C3 and C4 loads
grow with every ratio, so if the independent optima are jointly feasible,
coordinate descent reaches exactly them, and step 2 is a shortcut for it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLarge, NoFeasibleSolution
from .instant import _mu_bounds, _power
from .objective import check_feasibility, consumption, evaluate, tail_probability
from .report import SolveReport
from .scenario import Allocation, Scenario
from .throughput import bits_for_rate, channel_rates

CHUNK = 1 << 15


@dataclass(frozen=True)
class OracleConfig:
    mu_grid_points: int = 128
    max_assignments: int = 1_000_000
    coordinate_descent_rounds: int = 3
    strict: bool = False

    def __post_init__(self):
        if self.mu_grid_points < 8:
            raise ValueError("mu_grid_points must be at least 8")
        if self.coordinate_descent_rounds < 1:
            raise ValueError("coordinate_descent_rounds must be at least 1")


class _UserTable:
    """Grid evaluation of one user's contribution for every channel subset."""

    def __init__(self, scenario: Scenario, k: int, points: int):
        N = scenario.N
        self.scenario, self.k = scenario, k
        lo, hi = _mu_bounds(scenario, k)
        self.grid = np.linspace(lo, hi, points)
        self.rates = channel_rates(scenario, k, self.grid)  # (G, N)
        self.denom = consumption(scenario, k, self.grid)
        self.energy = scenario.timing.T_d * scenario.rho[k] * self.grid
        self.power = _power(scenario, k, self.grid)
        self.interference = self.power[:, None] * scenario.pu_factor[k]  # (G, M)
        n_masks = 1 << N
        self.best_value = np.empty(n_masks)
        self.best_index = np.empty(n_masks, dtype=np.int64)
        bits = (np.arange(n_masks)[:, None] >> np.arange(N)) & 1
        for start in range(0, n_masks, CHUNK):
            contrib = self.contributions(bits[start:start + CHUNK])
            idx = np.argmax(contrib, axis=1)
            self.best_index[start:start + CHUNK] = idx
            self.best_value[start:start + CHUNK] = contrib[np.arange(len(idx)), idx]

    def contributions(self, bits) -> np.ndarray:
        """Contribution over the grid for 0/1 subset rows ``bits``; C1 misses are -inf."""
        s, k = self.scenario, self.k
        R = np.asarray(bits, dtype=float) @ self.rates.T  # (masks, G)
        ee = R / self.denom / s.ee_unit
        tail = tail_probability(s.devices[k].buffer, bits_for_rate(s, R, self.grid))
        c = ee + s.eta[k] * tail
        return np.where(R >= s.rate_floor[k], c, -np.inf)

    def mask_contributions(self, mask: int) -> np.ndarray:
        bits = (mask >> np.arange(self.scenario.N)) & 1
        return self.contributions(bits[None, :])[0]


def _digits(codes, K, N):
    """Channel -> user assignments for lexicographic codes (channel 0 most significant)."""
    powers = K ** np.arange(N - 1, -1, -1, dtype=np.int64)
    return (codes[:, None] // powers) % K


def _coupling_ok(scenario, tables, idx):
    """C3 and C4 for grid indices ``idx`` (users x candidates)."""
    e = sum(t.energy[i] for t, i in zip(tables, idx))
    ok = e <= scenario.E_max_ap
    if scenario.M:
        load = sum(t.interference[i] for t, i in zip(tables, idx))
        ok = ok & np.all(load <= scenario.I_th, axis=-1)
    return ok


def _coordinate_descent(scenario, tables, masks, rounds):
    contrib = [t.mask_contributions(int(m)) for t, m in zip(tables, masks)]
    idx = []
    for c in contrib:
        finite = np.nonzero(np.isfinite(c))[0]
        if finite.size == 0:
            return -np.inf, None
        idx.append(int(finite[0]))
    if not _coupling_ok(scenario, tables, [np.array(i) for i in idx]):
        return -np.inf, None
    K = len(tables)
    # blocks of two users so a binding C3/C4 budget can move between them
    blocks = [(k, l) for k in range(K) for l in range(k + 1, K)] or [(0,)]
    for _ in range(rounds):
        changed = False
        for block in blocks:
            rest = [l for l in range(K) if l not in block]
            e = sum(tables[l].energy[idx[l]] for l in rest)
            load = sum(tables[l].interference[idx[l]] for l in rest)
            total = 0.0
            for pos, k in enumerate(block):
                view = [1] * len(block)
                view[pos] = -1
                total = total + contrib[k].reshape(view)
                e = e + tables[k].energy.reshape(view)
                load = load + tables[k].interference.reshape(view + [scenario.M])
            ok = e <= scenario.E_max_ap
            if scenario.M:
                ok = ok & np.all(load <= scenario.I_th, axis=-1)
            cand = np.where(ok, total, -np.inf)
            j = np.unravel_index(int(np.argmax(cand)), cand.shape)
            if cand[j] > sum(contrib[k][idx[k]] for k in block):
                for k, i in zip(block, j):
                    idx[k] = int(i)
                changed = True
        if not changed:
            break
    return float(sum(c[i] for c, i in zip(contrib, idx))), idx


def _joint_search(scenario, tables, masks):
    """Full grid**K search over all users' ratios for one assignment."""
    contrib = [t.mask_contributions(int(m)) for t, m in zip(tables, masks)]
    K = len(tables)
    shape = [len(t.grid) for t in tables]
    total = np.zeros(shape)
    energy = np.zeros(shape)
    load = np.zeros(shape + [scenario.M])
    for k, (t, c) in enumerate(zip(tables, contrib)):
        view = [1] * K
        view[k] = shape[k]
        total = total + c.reshape(view)
        energy = energy + t.energy.reshape(view)
        load = load + t.interference.reshape(view + [scenario.M])
    ok = energy <= scenario.E_max_ap
    if scenario.M:
        ok &= np.all(load <= scenario.I_th, axis=-1)
    total = np.where(ok, total, -np.inf)
    flat = int(np.argmax(total))
    best = float(total.flat[flat])
    if not np.isfinite(best):
        return -np.inf, None
    return best, [int(i) for i in np.unravel_index(flat, shape)]


def _grid_step_variation(contrib_rows) -> float:
    out = 0.0
    for c in contrib_rows:
        ok = np.isfinite(c[1:]) & np.isfinite(c[:-1])
        if np.any(ok):
            with np.errstate(invalid="ignore"):
                step = np.diff(c)
            out += float(np.max(np.abs(step[ok])))
    return out


def solve_oracle(scenario: Scenario, config: OracleConfig | None = None):
    """Best complete assignment and grid ratios; returns ``(allocation, report)``."""
    config = config or OracleConfig()
    start = time.perf_counter()
    K, N = scenario.K, scenario.N
    n_assign = K ** N
    if n_assign > config.max_assignments:
        raise InstanceTooLarge(f"K^N = {n_assign} exceeds {config.max_assignments}")
    if config.strict and K > 3:
        raise InstanceTooLarge("strict joint-grid search is limited to K <= 3")

    tables = [_UserTable(scenario, k, config.mu_grid_points) for k in range(K)]
    best_total, best_code, best_idx = -np.inf, -1, None
    enumerated = 0
    coordinate_runs = 0
    shifts = np.arange(N, dtype=np.int64)

    for first in range(0, n_assign, CHUNK):
        codes = np.arange(first, min(first + CHUNK, n_assign), dtype=np.int64)
        enumerated += len(codes)
        digits = _digits(codes, K, N)
        masks = np.stack([((digits == k) << shifts).sum(axis=1) for k in range(K)])
        if config.strict:
            for j, code in enumerate(codes):
                total, idx = _joint_search(scenario, tables, masks[:, j])
                if total > best_total:
                    best_total, best_code, best_idx = total, int(code), idx
            continue
        values = np.stack([t.best_value[m] for t, m in zip(tables, masks)])
        idx = np.stack([t.best_index[m] for t, m in zip(tables, masks)])
        totals = values.sum(axis=0)
        finite = np.isfinite(totals)
        coupled = finite & ~_coupling_ok(scenario, tables, idx)
        for j in np.nonzero(coupled)[0]:
            coordinate_runs += 1
            total, cd_idx = _coordinate_descent(
                scenario, tables, masks[:, j], config.coordinate_descent_rounds)
            totals[j] = total
            if cd_idx is not None:
                idx[:, j] = cd_idx
        j = int(np.argmax(totals))
        if totals[j] > best_total:
            best_total, best_code, best_idx = float(totals[j]), int(codes[j]), list(idx[:, j])

    if enumerated != n_assign:
        raise AssertionError(f"enumerated {enumerated} of {n_assign} assignments")
    if best_idx is None:
        raise NoFeasibleSolution("no channel assignment satisfies C1-C4")

    assignment = _digits(np.array([best_code]), K, N)[0]
    mu = np.array([t.grid[i] for t, i in zip(tables, best_idx)])
    allocation = Allocation.from_assignment(assignment, K, mu)
    best_masks = [int(((assignment == k) << shifts).sum()) for k in range(K)]
    tolerance = _grid_step_variation(
        [t.mask_contributions(m) for t, m in zip(tables, best_masks)])
    objective = evaluate(allocation, scenario)
    feasibility = check_feasibility(allocation, scenario)
    report = SolveReport(
        solver="oracle-strict" if config.strict else "oracle",
        scenario_id=scenario.identity,
        allocation=allocation,
        objective=objective,
        feasibility=feasibility,
        evaluations=n_assign,
        status="ok" if feasibility.feasible else "infeasible:" + ",".join(feasibility.violated()),
        wall_clock=time.perf_counter() - start,
        grid_tolerance=tolerance,
        extra={"assignments": enumerated, "coordinate_descent_runs": coordinate_runs,
               "grid_objective": best_total, "mu_grid_points": config.mu_grid_points},
    )
    return allocation, report

"""Problem-instance types and seeded scenario generation.

Units are SI throughout: seconds, Joules, Watts, Hz, bits.

Channel labels: the ``N`` allocatable channels are the sensed-available set,
the sensed-unavailable set holds the channels that were detected busy. Both
sets index rows of each device's ``cross_interference`` matrix, so a device
carries one row per sensed channel and one column per primary user.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Union

import numpy as np

from .errors import InvalidScenario

EPS = 1e-6
BITS_DEFINITIONS = ("paper_literal", "slot_total")


def _frozen_array(values, dtype=float, ndim=1):
    arr = np.array(values, dtype=dtype)
    if arr.ndim != ndim:
        raise InvalidScenario(f"expected {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SlotTiming:
    T: float = 0.1
    T_c: float = 0.01
    T_d: float = 0.09

    def __post_init__(self):
        if min(self.T, self.T_c, self.T_d) <= 0:
            raise InvalidScenario("slot durations must be strictly positive")
        if not np.isclose(self.T, self.T_c + self.T_d, rtol=1e-12, atol=0.0):
            raise InvalidScenario(f"T={self.T} != T_c + T_d = {self.T_c + self.T_d}")


@dataclass(frozen=True)
class UniformBuffer:
    """Buffer occupancy uniform on [a, b] bits."""

    a: float
    b: float

    def __post_init__(self):
        if not 0 <= self.a < self.b:
            raise InvalidScenario(f"uniform buffer needs 0 <= a < b, got {self.a}, {self.b}")

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class ExponentialBuffer:
    """Buffer occupancy exponential with rate ``lam`` (1/bits)."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidScenario(f"exponential buffer needs lam > 0, got {self.lam}")

    def mean(self) -> float:
        return 1.0 / self.lam


BufferDistribution = Union[UniformBuffer, ExponentialBuffer]


@dataclass(frozen=True, eq=False)
class Device:
    id: int
    E_res: float
    E_sen: float
    P_idle: float
    tau_s: float
    rho_av: float
    gains: np.ndarray
    I_k: float
    buffer: BufferDistribution
    cross_interference: np.ndarray
    # aggregate idle energy; takes precedence over P_idle * (T_c - tau_s)
    E_idle: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "gains", _frozen_array(self.gains))
        object.__setattr__(
            self, "cross_interference", _frozen_array(self.cross_interference, ndim=2)
        )
        if self.E_res < 0 or self.E_sen <= 0 or self.rho_av <= 0:
            raise InvalidScenario(
                f"device {self.id}: need E_res >= 0, E_sen > 0, rho_av > 0"
            )
        if self.P_idle < 0 or self.tau_s < 0 or self.I_k < 0:
            raise InvalidScenario(f"device {self.id}: negative idle power, tau_s or I_k")
        if self.E_idle is not None and self.E_idle < 0:
            raise InvalidScenario(f"device {self.id}: negative E_idle")
        if not np.all(np.isfinite(self.gains)) or np.any(self.gains < 0):
            raise InvalidScenario(f"device {self.id}: gains must be finite and >= 0")
        if np.any(self.cross_interference < 0):
            raise InvalidScenario(f"device {self.id}: negative cross-interference factor")

    def idle_energy(self, timing: SlotTiming) -> float:
        if self.E_idle is not None:
            return self.E_idle
        return self.P_idle * (timing.T_c - self.tau_s)


@dataclass(frozen=True, eq=False)
class SensingModel:
    sensed_available: tuple
    sensed_unavailable: tuple
    p_missed_busy: np.ndarray  # P2,n aligned with sensed_available
    p_correct_busy: np.ndarray  # P1,n aligned with sensed_unavailable

    def __post_init__(self):
        object.__setattr__(self, "sensed_available", tuple(int(n) for n in self.sensed_available))
        object.__setattr__(
            self, "sensed_unavailable", tuple(int(n) for n in self.sensed_unavailable)
        )
        object.__setattr__(self, "p_missed_busy", _frozen_array(self.p_missed_busy))
        object.__setattr__(self, "p_correct_busy", _frozen_array(self.p_correct_busy))
        if set(self.sensed_available) & set(self.sensed_unavailable):
            raise InvalidScenario("sensed available/unavailable sets overlap")
        if len(set(self.sensed_available)) != len(self.sensed_available):
            raise InvalidScenario("duplicate labels in sensed_available")
        if len(self.p_missed_busy) != len(self.sensed_available):
            raise InvalidScenario("p_missed_busy must align with sensed_available")
        if len(self.p_correct_busy) != len(self.sensed_unavailable):
            raise InvalidScenario("p_correct_busy must align with sensed_unavailable")
        for p in (self.p_missed_busy, self.p_correct_busy):
            if np.any((p < 0) | (p > 1)):
                raise InvalidScenario("sensing probabilities must lie in [0, 1]")

    @property
    def n_labels(self) -> int:
        return max(self.sensed_available + self.sensed_unavailable, default=-1) + 1

    @classmethod
    def default(cls, N: int, n_unavailable: int, p1: float = 0.9, p2: float = 0.1):
        return cls(
            sensed_available=tuple(range(N)),
            sensed_unavailable=tuple(range(N, N + n_unavailable)),
            p_missed_busy=np.full(N, p2),
            p_correct_busy=np.full(n_unavailable, p1),
        )


@dataclass(frozen=True, eq=False)
class Scenario:
    devices: tuple
    n_channels: int
    I_th: np.ndarray
    timing: SlotTiming
    B: float
    N0: float
    gamma: float
    E_max_ap: float
    sensing: SensingModel
    eta: np.ndarray
    min_rate_coeff: float
    # bits/s/J per objective unit; the EE term enters the objective as EE / ee_unit
    ee_unit: float = 1e9
    rate_includes_bandwidth: bool = True
    bits_definition: str = "paper_literal"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "I_th", _frozen_array(self.I_th))
        eta = np.broadcast_to(np.asarray(self.eta, dtype=float), (len(self.devices),))
        object.__setattr__(self, "eta", _frozen_array(eta))
        K, N, M = len(self.devices), self.n_channels, len(self.I_th)
        if K < 1 or N < 1:
            raise InvalidScenario("need at least one device and one channel")
        if min(self.B, self.N0, self.gamma, self.E_max_ap, self.ee_unit) <= 0:
            raise InvalidScenario("B, N0, gamma, E_max_ap and ee_unit must be positive")
        if np.any(self.eta < 0) or self.min_rate_coeff < 0:
            raise InvalidScenario("eta and min_rate_coeff must be non-negative")
        if np.any(self.I_th <= 0):
            raise InvalidScenario("interference thresholds must be positive")
        if self.bits_definition not in BITS_DEFINITIONS:
            raise InvalidScenario(f"bits_definition must be one of {BITS_DEFINITIONS}")
        if len(self.sensing.sensed_available) != N:
            raise InvalidScenario("sensed_available must list exactly N channels")
        for d in self.devices:
            if d.gains.shape != (N,):
                raise InvalidScenario(f"device {d.id}: expected {N} gains")
            if d.cross_interference.shape[0] < self.sensing.n_labels:
                raise InvalidScenario(f"device {d.id}: cross_interference misses channels")
            if d.cross_interference.shape[1] != M:
                raise InvalidScenario(f"device {d.id}: cross_interference needs {M} PU columns")
            if d.tau_s > self.timing.T_c:
                raise InvalidScenario(f"device {d.id}: tau_s exceeds the control slot")

    @property
    def K(self) -> int:
        return len(self.devices)

    @property
    def N(self) -> int:
        return self.n_channels

    @property
    def M(self) -> int:
        return len(self.I_th)

    # Per-scenario arrays shared by the vectorized evaluators.

    @cached_property
    def gains(self) -> np.ndarray:
        return np.stack([d.gains for d in self.devices])

    @cached_property
    def rho(self) -> np.ndarray:
        return np.array([d.rho_av for d in self.devices])

    @cached_property
    def E_res(self) -> np.ndarray:
        return np.array([d.E_res for d in self.devices])

    @cached_property
    def E_sen(self) -> np.ndarray:
        return np.array([d.E_sen for d in self.devices])

    @cached_property
    def E_idle(self) -> np.ndarray:
        return np.array([d.idle_energy(self.timing) for d in self.devices])

    @cached_property
    def H(self) -> np.ndarray:
        """Effective gains |h|^2 / (gamma (N0 + I_k)), shape (K, N)."""
        I_k = np.array([d.I_k for d in self.devices])
        return self.gains / (self.gamma * (self.N0 + I_k))[:, None]

    @cached_property
    def pu_factor(self) -> np.ndarray:
        """Sensing-weighted interference I_{k,m} per transmitted Watt, shape (K, M)."""
        s = self.sensing
        out = np.zeros((self.K, self.M))
        for k, d in enumerate(self.devices):
            ci = d.cross_interference
            if s.sensed_unavailable:
                out[k] += s.p_correct_busy @ ci[list(s.sensed_unavailable)]
            out[k] += s.p_missed_busy @ ci[list(s.sensed_available)]
        return out

    @cached_property
    def rate_floor(self) -> np.ndarray:
        """C1 targets h(E[X_k]) in bits/s."""
        means = np.array([d.buffer.mean() for d in self.devices])
        return min_rate(means, self.min_rate_coeff, self.timing.T)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)

    def with_devices(self, devices) -> "Scenario":
        """Scenario restricted to (or rebuilt from) the given devices."""
        devices = tuple(devices)
        eta = np.array([self.eta[self._index_of(d)] for d in devices])
        return replace(self, devices=devices, eta=eta)

    def _index_of(self, device) -> int:
        for k, d in enumerate(self.devices):
            if d.id == device.id:
                return k
        raise InvalidScenario(f"unknown device id {device.id}")

    def to_dict(self) -> dict:
        return scenario_to_dict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @cached_property
    def identity(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def min_rate(mean_bits, coeff, T):
    """Linear minimum-rate function h(x) = coeff * x / T (bits/s)."""
    return coeff * np.asarray(mean_bits, dtype=float) / T


@dataclass
class Allocation:
    """Channel assignment ``g`` (K x N, 0/1) plus harvesting ratios ``mu``."""

    g: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.int8)
        self.mu = np.asarray(self.mu, dtype=float)
        if self.g.ndim != 2 or self.mu.shape != (self.g.shape[0],):
            raise InvalidScenario("g must be K x N and mu length K")
        if np.any((self.g != 0) & (self.g != 1)):
            raise InvalidScenario("g must be binary")

    @classmethod
    def empty(cls, K: int, N: int, mu=None) -> "Allocation":
        mu = np.full(K, 0.5) if mu is None else mu
        return cls(np.zeros((K, N), dtype=np.int8), np.array(mu, dtype=float))

    @classmethod
    def from_assignment(cls, assignment, K: int, mu) -> "Allocation":
        """Build from a channel -> user vector (-1 for unassigned)."""
        assignment = np.asarray(assignment)
        g = np.zeros((K, len(assignment)), dtype=np.int8)
        held = assignment >= 0
        g[assignment[held], np.nonzero(held)[0]] = 1
        return cls(g, np.array(mu, dtype=float))

    @property
    def assignment(self) -> np.ndarray:
        """Channel -> user index, -1 where a channel is unassigned."""
        out = np.full(self.g.shape[1], -1)
        k, n = np.nonzero(self.g)
        out[n] = k
        return out

    def is_complete(self) -> bool:
        return bool(np.all(self.g.sum(axis=0) == 1))

    def copy(self) -> "Allocation":
        return Allocation(self.g.copy(), self.mu.copy())

    def to_dict(self) -> dict:
        return {"g": self.g.tolist(), "mu": [float(m) for m in self.mu]}


# --------------------------------------------------------------------------
# generation

DEFAULTS = {
    "B": 62.5e3,
    "N0": 1e-13,
    "I_th": 5e-13,
    "gamma": 1.0,
    "E_max_ap": 0.1,
    "E_sen": 2e-3,
    "E_res": 3e-3,
    "E_idle": 1e-6,
    "T": 0.1,
    "T_c": 0.01,
    "T_d": 0.09,
    "tau_s": 5e-3,
    "rho_range": (0.02, 0.1),
    "rho_av": None,
    "eta": 1.0,
    "min_rate_coeff": 0.1,
    "buffer": ("uniform", 0.0, 1e5),
    "d_min": 1.0,
    "d_max": 50.0,
    "beta": 3.0,
    "pu_d_range": (200.0, 400.0),
    "p1": 0.9,
    "p2": 0.1,
    "n_unavailable": None,
    "I_k": 0.0,
    "ee_unit": 1e9,
    "rate_includes_bandwidth": True,
    "bits_definition": "paper_literal",
}

RAYLEIGH_SCALE = 1.0 / np.sqrt(2.0)  # E[Z^2] = 2 sigma^2 = 1


def make_buffer(spec) -> BufferDistribution:
    if isinstance(spec, (UniformBuffer, ExponentialBuffer)):
        return spec
    if isinstance(spec, dict):
        return _buffer_from_dict(spec)
    kind, *params = spec
    if kind == "uniform":
        return UniformBuffer(float(params[0]), float(params[1]))
    if kind == "exponential":
        return ExponentialBuffer(float(params[0]))
    raise InvalidScenario(f"unknown buffer kind {kind!r}")


def _per_device(value, K, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (K,)) if np.ndim(value) == 0 \
        else np.asarray(value, dtype=float)
    if arr.shape != (K,):
        raise InvalidScenario(f"override {name!r} needs a scalar or {K} values")
    return arr


def _rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed % 2**64, *path]))


def generate_scenario(seed: int, K: int, N: int, M: int = 1, overrides: dict | None = None) -> Scenario:
    """Draw a random instance of the simulation setup.

    Each device draws from its own random stream, and channel gains are
    drawn channel by channel, so growing ``K`` or ``N`` with the same seed
    extends an instance instead of reshuffling it.
    """
    if K < 1 or N < 1:
        raise InvalidScenario("K and N must be at least 1")
    if M < 0:
        raise InvalidScenario("M must be non-negative")
    p = dict(DEFAULTS)
    unknown = set(overrides or ()) - set(DEFAULTS)
    if unknown:
        raise InvalidScenario(f"unknown override(s): {sorted(unknown)}")
    p.update(overrides or {})

    if not 0 < p["d_min"] < p["d_max"]:
        raise InvalidScenario("need 0 < d_min < d_max")
    timing = SlotTiming(p["T"], p["T_c"], p["T_d"])
    U = N if p["n_unavailable"] is None else int(p["n_unavailable"])
    sensing = SensingModel.default(N, U, p["p1"], p["p2"])
    buffers = p["buffer"]
    # a bare spec ("uniform", a, b) or {"kind": ...} applies to every device
    if not isinstance(buffers, list) or (buffers and isinstance(buffers[0], str)):
        buffers = [buffers] * K
    if len(buffers) != K:
        raise InvalidScenario("per-device buffer override needs K entries")

    E_res = _per_device(p["E_res"], K, "E_res")
    E_sen = _per_device(p["E_sen"], K, "E_sen")
    E_idle = _per_device(p["E_idle"], K, "E_idle") if p["E_idle"] is not None else None
    tau_s = _per_device(p["tau_s"], K, "tau_s")
    I_k = _per_device(p["I_k"], K, "I_k")
    rho_fixed = None if p["rho_av"] is None else _per_device(p["rho_av"], K, "rho_av")

    devices = []
    for k in range(K):
        rng = _rng(seed, 0, k)
        lo, hi = p["rho_range"]
        rho = float(rng.uniform(lo, hi))
        if rho_fixed is not None:
            rho = float(rho_fixed[k])
        # distance to the AP is a property of the device; fading is per channel
        dist = float(rng.uniform(p["d_min"], p["d_max"]))
        z = np.empty(N)
        for n in range(N):
            z[n] = rng.rayleigh(RAYLEIGH_SCALE)
        gains = (z * dist ** (-p["beta"])) ** 2

        pu_rng = _rng(seed, 1, k)
        pu_gain = np.empty(M)
        for m in range(M):
            zm = pu_rng.rayleigh(RAYLEIGH_SCALE)
            dm = pu_rng.uniform(*p["pu_d_range"])
            pu_gain[m] = (zm * dm ** (-p["beta"])) ** 2
        cross = np.tile(pu_gain, (N + U, 1))

        e_idle = None if E_idle is None else float(E_idle[k])
        window = p["T_c"] - tau_s[k]
        p_idle = (e_idle / window) if (e_idle is not None and window > 0) else 0.0
        devices.append(
            Device(
                id=k,
                E_res=float(E_res[k]),
                E_sen=float(E_sen[k]),
                P_idle=p_idle,
                tau_s=float(tau_s[k]),
                rho_av=rho,
                gains=gains,
                I_k=float(I_k[k]),
                buffer=make_buffer(buffers[k]),
                cross_interference=cross,
                E_idle=e_idle,
            )
        )

    return Scenario(
        devices=tuple(devices),
        n_channels=N,
        I_th=np.full(M, p["I_th"]) if np.ndim(p["I_th"]) == 0 else np.asarray(p["I_th"]),
        timing=timing,
        B=float(p["B"]),
        N0=float(p["N0"]),
        gamma=float(p["gamma"]),
        E_max_ap=float(p["E_max_ap"]),
        sensing=sensing,
        eta=_per_device(p["eta"], K, "eta"),
        min_rate_coeff=float(p["min_rate_coeff"]),
        ee_unit=float(p["ee_unit"]),
        rate_includes_bandwidth=bool(p["rate_includes_bandwidth"]),
        bits_definition=p["bits_definition"],
        seed=seed,
    )


# --------------------------------------------------------------------------
# JSON round trip

def _buffer_to_dict(b):
    if isinstance(b, UniformBuffer):
        return {"kind": "uniform", "a": b.a, "b": b.b}
    return {"kind": "exponential", "lambda": b.lam}


def _buffer_from_dict(d):
    if d["kind"] == "uniform":
        return UniformBuffer(float(d["a"]), float(d["b"]))
    if d["kind"] == "exponential":
        return ExponentialBuffer(float(d["lambda"]))
    raise InvalidScenario(f"unknown buffer kind {d['kind']!r}")


def _floats(arr):
    return [float(x) for x in np.asarray(arr).ravel()]


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "devices": [
            {
                "id": d.id,
                "E_res": d.E_res,
                "E_sen": d.E_sen,
                "E_idle": d.E_idle,
                "P_idle": d.P_idle,
                "tau_s": d.tau_s,
                "rho_av": d.rho_av,
                "gains": _floats(d.gains),
                "I_k": d.I_k,
                "buffer": _buffer_to_dict(d.buffer),
                "cross_interference": [_floats(row) for row in d.cross_interference],
            }
            for d in s.devices
        ],
        "n_channels": s.n_channels,
        "I_th": _floats(s.I_th),
        "timing": {"T": s.timing.T, "T_c": s.timing.T_c, "T_d": s.timing.T_d},
        "B": s.B,
        "N0": s.N0,
        "gamma": s.gamma,
        "E_max_ap": s.E_max_ap,
        "sensing": {
            "sensed_available": list(s.sensing.sensed_available),
            "sensed_unavailable": list(s.sensing.sensed_unavailable),
            "p_missed_busy": _floats(s.sensing.p_missed_busy),
            "p_correct_busy": _floats(s.sensing.p_correct_busy),
        },
        "eta": _floats(s.eta),
        "min_rate_coeff": s.min_rate_coeff,
        "ee_unit": s.ee_unit,
        "rate_includes_bandwidth": s.rate_includes_bandwidth,
        "bits_definition": s.bits_definition,
        "seed": s.seed,
    }


def scenario_from_dict(data: dict) -> Scenario:
    M = len(data["I_th"])
    devices = []
    for d in data["devices"]:
        cross = np.array(d["cross_interference"], dtype=float).reshape(-1, M)
        devices.append(
            Device(
                id=int(d["id"]),
                E_res=float(d["E_res"]),
                E_sen=float(d["E_sen"]),
                P_idle=float(d["P_idle"]),
                tau_s=float(d["tau_s"]),
                rho_av=float(d["rho_av"]),
                gains=d["gains"],
                I_k=float(d["I_k"]),
                buffer=_buffer_from_dict(d["buffer"]),
                cross_interference=cross,
                E_idle=None if d.get("E_idle") is None else float(d["E_idle"]),
            )
        )
    sens = data["sensing"]
    return Scenario(
        devices=tuple(devices),
        n_channels=int(data["n_channels"]),
        I_th=data["I_th"],
        timing=SlotTiming(**data["timing"]),
        B=float(data["B"]),
        N0=float(data["N0"]),
        gamma=float(data["gamma"]),
        E_max_ap=float(data["E_max_ap"]),
        sensing=SensingModel(
            sens["sensed_available"],
            sens["sensed_unavailable"],
            sens["p_missed_busy"],
            sens["p_correct_busy"],
        ),
        eta=data["eta"],
        min_rate_coeff=float(data["min_rate_coeff"]),
        ee_unit=float(data.get("ee_unit", 1e9)),
        rate_includes_bandwidth=bool(data.get("rate_includes_bandwidth", True)),
        bits_definition=data.get("bits_definition", "paper_literal"),
        seed=data.get("seed"),
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Achievable uplink rates and deliverable bits."""

from __future__ import annotations

import numpy as np

from .energy import max_transmit_energy
from .errors import InfeasibleMu
from .scenario import Allocation, Device, Scenario, SlotTiming

LN2 = np.log(2.0)


def transmit_time(mu, timing: SlotTiming):
    return (1.0 - mu) * timing.T_d


def subchannel_rate(H_kn, mu, device: Device, timing: SlotTiming, B: float,
                    include_bandwidth: bool = True):
    """Rate of ``device`` on one sub-channel with effective gain ``H_kn`` (bits/s).

    With ``include_bandwidth=False`` the result is in bits/s/Hz.
    """
    e_tr = max_transmit_energy(device, mu, timing)
    if np.any(np.asarray(e_tr) < 0):
        raise InfeasibleMu(f"device {device.id}: negative transmit energy at mu={mu}")
    t_tr = transmit_time(mu, timing)
    scale = B if include_bandwidth else 1.0
    return _rate(H_kn, e_tr, t_tr, timing.T, scale)


def _rate(H, e_tr, t_tr, T, scale):
    snr = H * e_tr / t_tr
    return (t_tr / T) * scale * np.log1p(snr) / LN2


def channel_rates(scenario: Scenario, k: int, mu) -> np.ndarray:
    """Rates of user ``k`` on every channel; ``mu`` may be an array.

    Returns shape ``np.shape(mu) + (N,)``. Negative budgets are clipped to
    zero, callers keep ``mu`` inside the feasible range.
    """
    mu = np.asarray(mu, dtype=float)
    d = scenario.devices[k]
    timing = scenario.timing
    e_tr = np.maximum(max_transmit_energy(d, mu, timing), 0.0)[..., None]
    t_tr = transmit_time(mu, timing)[..., None]
    scale = scenario.B if scenario.rate_includes_bandwidth else 1.0
    return _rate(scenario.H[k], e_tr, t_tr, timing.T, scale)


def user_rate(allocation: Allocation, k: int, scenario: Scenario) -> float:
    held = np.nonzero(allocation.g[k])[0]
    if held.size == 0:
        return 0.0
    return float(channel_rates(scenario, k, allocation.mu[k])[held].sum())


def bits_for_rate(scenario: Scenario, rate, mu):
    """Bits fed into the buffer tail probability for a user rate ``rate``."""
    if scenario.bits_definition == "slot_total":
        return rate * scenario.timing.T
    return rate * transmit_time(np.asarray(mu, dtype=float), scenario.timing)


def delivered_bits(allocation: Allocation, k: int, scenario: Scenario) -> float:
    return float(bits_for_rate(scenario, user_rate(allocation, k, scenario), allocation.mu[k]))

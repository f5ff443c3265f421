"""Per-slot energy bookkeeping for one device.

Every device transmits with its whole causality budget, so the harvesting
ratio ``mu`` is the only continuous decision per device.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleDevice, InfeasibleMu, UndefinedPower
from .scenario import EPS, Device, SlotTiming


@dataclass(frozen=True)
class EnergyLedger:
    E_har: float
    E_tr: float
    E_idle: float
    E_con: float
    E_res_next: float


def harvested_energy(rho_av, mu, T_d):
    return rho_av * mu * T_d


def max_transmit_energy(device: Device, mu, timing: SlotTiming):
    """Transmit budget left after reserving sensing energy for this slot and the next.

    Negative values mean the device cannot afford ``mu``.
    """
    return device.E_res + harvested_energy(device.rho_av, mu, timing.T_d) - 2.0 * device.E_sen


def raw_min_harvesting_ratio(device: Device, timing: SlotTiming) -> float:
    return (2.0 * device.E_sen - device.E_res) / (device.rho_av * timing.T_d)


def min_harvesting_ratio(device: Device, timing: SlotTiming) -> float:
    """Smallest ratio with a non-negative transmit budget, clamped to [EPS, 1 - EPS]."""
    raw = raw_min_harvesting_ratio(device, timing)
    if raw >= 1.0:
        raise InfeasibleDevice(device.id, raw)
    return float(min(max(EPS, raw), 1.0 - EPS))


def transmit_power(device: Device, mu, timing: SlotTiming):
    if np.any(np.asarray(mu) >= 1.0):
        raise UndefinedPower(f"device {device.id}: transmit power undefined for mu >= 1")
    return max_transmit_energy(device, mu, timing) / ((1.0 - mu) * timing.T_d)


def ledger_for_device(device: Device, mu: float, timing: SlotTiming) -> EnergyLedger:
    E_har = harvested_energy(device.rho_av, mu, timing.T_d)
    E_tr = max_transmit_energy(device, mu, timing)
    # round-off at mu_min can leave a budget of -1e-19 J; that still counts as zero
    if E_tr < -1e-12 * (device.E_res + E_har + 2.0 * device.E_sen):
        raise InfeasibleMu(f"device {device.id}: negative transmit budget {E_tr:.3e} J at mu={mu}")
    E_tr = max(E_tr, 0.0)
    E_idle = device.idle_energy(timing)
    return EnergyLedger(
        E_har=E_har,
        E_tr=E_tr,
        E_idle=E_idle,
        E_con=E_tr + device.E_sen + E_idle,
        E_res_next=device.E_res + E_har - E_tr - device.E_sen,
    )


def total_consumption(devices, mu, timing: SlotTiming) -> float:
    return float(sum(ledger_for_device(d, m, timing).E_con for d, m in zip(devices, mu)))

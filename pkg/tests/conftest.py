from pathlib import Path

import numpy as np
import pytest

from ehcr.scenario import (
    Device,
    Scenario,
    SensingModel,
    SlotTiming,
    UniformBuffer,
    generate_scenario,
    load_scenario,
)

DATA = Path(__file__).parent / "data"


def make_device(k=0, *, E_res=3e-3, E_sen=2e-3, rho=0.05, gains=(1e-9,), buffer=None,
                cross=None, E_idle=1e-6, I_k=0.0, M=1):
    N = len(gains)
    if cross is None:
        cross = np.zeros((N, M))
    return Device(
        id=k, E_res=E_res, E_sen=E_sen, P_idle=0.0, tau_s=0.005, rho_av=rho,
        gains=np.asarray(gains, dtype=float), I_k=I_k,
        buffer=buffer or UniformBuffer(0.0, 1e5),
        cross_interference=np.asarray(cross, dtype=float), E_idle=E_idle,
    )


def make_scenario(devices, *, eta=0.0, min_rate_coeff=0.1, I_th=(5e-13,), E_max_ap=0.1,
                  sensing=None, **kw):
    N = len(devices[0].gains)
    return Scenario(
        devices=tuple(devices), n_channels=N, I_th=np.asarray(I_th, dtype=float),
        timing=SlotTiming(0.1, 0.01, 0.09), B=62500.0, N0=1e-13, gamma=1.0,
        E_max_ap=E_max_ap,
        sensing=sensing or SensingModel(tuple(range(N)), (), np.full(N, 0.1), np.zeros(0)),
        eta=eta, min_rate_coeff=min_rate_coeff, **kw,
    )


@pytest.fixture
def fixture_scenario():
    """Seed 7, K=2, N=4 instance frozen to JSON."""
    return load_scenario(DATA / "seed7_k2_n4.json")


@pytest.fixture
def small():
    return generate_scenario(7, 2, 4)


# pass/fail lines from tests/test_acceptance.py, repeated after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehcr.errors import InfeasibleMu
from ehcr.scenario import Allocation, SlotTiming, generate_scenario
from ehcr.throughput import (
    bits_for_rate,
    channel_rates,
    delivered_bits,
    subchannel_rate,
    transmit_time,
    user_rate,
)

from conftest import make_device

TIMING = SlotTiming(0.1, 0.01, 0.09)

# mpmath values from tests/oracles/derive.py, assignment (0, 1, 0, 1), mu = (0.6, 0.7)
FIXTURE_RATE = (227300.83644747975, 403312.48327077075)
FIXTURE_BITS = (8182.8301121092712, 10889.437048310811)
SINGLE_CHANNEL_RATE = 154857.15088592165


def device_with_budget(e_tr, mu=0.5):
    # E_res + rho mu T_d - 2 E_sen = e_tr with E_res = 3 mJ, E_sen = 2 mJ
    rho = (e_tr + 1e-3) / (mu * TIMING.T_d)
    return make_device(E_res=3e-3, E_sen=2e-3, rho=rho)


def test_unit_snr():
    # H E_tr / t_tr = 1 and t_tr / T = 0.5 with T_d = 0.1, T = 0.1 (no control slot share)
    timing = SlotTiming(0.1, 1e-9, 0.1 - 1e-9)
    mu = 1 - 0.05 / timing.T_d
    d = make_device(E_res=3e-3, E_sen=2e-3, rho=(1e-3 + 1e-3) / (mu * timing.T_d))
    H = 0.05 / 1e-3
    assert subchannel_rate(H, mu, d, timing, 62500.0) == pytest.approx(31250.0, rel=1e-9)


def test_zero_budget_zero_rate():
    d = device_with_budget(0.0)
    assert subchannel_rate(5e3, 0.5, d, TIMING, 62500.0) == pytest.approx(0.0, abs=1e-9)


def test_single_channel_reference():
    d = device_with_budget(1e-3)
    assert transmit_time(0.5, TIMING) == pytest.approx(0.045)
    r = subchannel_rate(2e3, 0.5, d, TIMING, 62500.0)
    assert r == pytest.approx(SINGLE_CHANNEL_RATE, rel=1e-12)
    lit = subchannel_rate(2e3, 0.5, d, TIMING, 62500.0, include_bandwidth=False)
    assert lit == pytest.approx(SINGLE_CHANNEL_RATE / 62500.0, rel=1e-12)


def test_negative_budget_rejected():
    d = make_device(E_res=0.0, E_sen=2e-3, rho=0.01)
    with pytest.raises(InfeasibleMu):
        subchannel_rate(1e3, 0.5, d, TIMING, 62500.0)


def test_fixture_rates(fixture_scenario):
    a = Allocation.from_assignment([0, 1, 0, 1], 2, [0.6, 0.7])
    for k in range(2):
        assert user_rate(a, k, fixture_scenario) == pytest.approx(FIXTURE_RATE[k], rel=1e-12)
        assert delivered_bits(a, k, fixture_scenario) == pytest.approx(FIXTURE_BITS[k], rel=1e-12)


def test_fixture_rates_brute_force(fixture_scenario):
    s = fixture_scenario
    a = Allocation.from_assignment([1, 1, 0, 1], 2, [0.55, 0.8])
    for k, d in enumerate(s.devices):
        expect = 0.0
        for n in range(s.N):
            if a.g[k, n]:
                expect += subchannel_rate(s.H[k, n], a.mu[k], d, s.timing, s.B)
        assert user_rate(a, k, s) == pytest.approx(expect, rel=1e-13)


def test_no_channels_zero_rate(fixture_scenario):
    a = Allocation.from_assignment([0, 0, 0, 0], 2, [0.6, 0.7])
    assert user_rate(a, 1, fixture_scenario) == 0.0
    assert delivered_bits(a, 1, fixture_scenario) == 0.0


def test_bits_vanish_near_one(fixture_scenario):
    prev = math.inf
    for mu in (0.9, 0.99, 0.999, 1 - 1e-6):
        a = Allocation.from_assignment([0, 0, 0, 0], 2, [mu, 0.5])
        b = delivered_bits(a, 0, fixture_scenario)
        assert b < prev
        prev = b
    assert prev < 1.0


def test_slot_total_bits(fixture_scenario):
    s = fixture_scenario.replace(bits_definition="slot_total")
    assert bits_for_rate(s, 1000.0, 0.5) == pytest.approx(100.0)


def test_additivity_and_shape():
    s = generate_scenario(4, 3, 6)
    mu = np.array([[0.5, 0.6], [0.7, 0.8]])
    r = channel_rates(s, 1, mu)
    assert r.shape == (2, 2, 6)
    a = Allocation.from_assignment([1] * 6, 3, [0.5, 0.6, 0.6])
    assert user_rate(a, 1, s) == pytest.approx(channel_rates(s, 1, 0.6).sum(), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(H=st.floats(0.0, 1e9), scale=st.floats(1.0, 16.0), mu=st.floats(0.3, 0.999))
def test_rate_monotone_in_gain(H, scale, mu):
    d = make_device(E_res=3e-3, E_sen=2e-3, rho=0.08)
    lo = subchannel_rate(H, mu, d, TIMING, 62500.0)
    hi = subchannel_rate(H * scale, mu, d, TIMING, 62500.0)
    assert hi >= lo >= 0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_rate_continuous_and_vanishing(seed):
    s = generate_scenario(seed, 1, 3)
    mu = np.linspace(0.5, 1 - 1e-9, 20001)
    R = channel_rates(s, 0, mu).sum(axis=-1)
    assert np.all(np.isfinite(R))
    # continuity: the largest step shrinks when its interval is refined
    j = int(np.argmax(np.abs(np.diff(R))))
    jump = abs(R[j + 1] - R[j])
    fine = np.linspace(mu[j], mu[j + 1], 1001)
    fine_R = channel_rates(s, 0, fine).sum(axis=-1)
    assert np.max(np.abs(np.diff(fine_R))) <= 0.5 * jump + 1e-9
    assert R[-1] < 1e-3 * R.max() + 1e-6

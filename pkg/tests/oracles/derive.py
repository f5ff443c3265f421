"""Independent reference values for the frozen constants in the test suite.

Reads raw fields from the scenario JSON fixture and recomputes rates,
energies and objective terms with mpmath, without importing ehcr.
Run from the repository root:

    python tests/oracles/derive.py
"""

import itertools
import json
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 40
FIXTURE = Path(__file__).resolve().parents[1] / "data" / "seed7_k2_n4.json"


def load():
    return json.loads(FIXTURE.read_text())


def rate(sc, dev, held, mu):
    T = mp.mpf(sc["timing"]["T"])
    T_d = mp.mpf(sc["timing"]["T_d"])
    mu = mp.mpf(mu)
    e_tr = mp.mpf(dev["E_res"]) + mp.mpf(dev["rho_av"]) * mu * T_d - 2 * mp.mpf(dev["E_sen"])
    t_tr = (1 - mu) * T_d
    noise = mp.mpf(sc["gamma"]) * (mp.mpf(sc["N0"]) + mp.mpf(dev["I_k"]))
    total = mp.mpf(0)
    for n in held:
        H = mp.mpf(dev["gains"][n]) / noise
        total += (t_tr / T) * mp.mpf(sc["B"]) * mp.log(1 + H * e_tr / t_tr, 2)
    return total, t_tr


def consumption(sc, dev, mu):
    T_d = mp.mpf(sc["timing"]["T_d"])
    return (mp.mpf(dev["rho_av"]) * mp.mpf(mu) * T_d + mp.mpf(dev["E_res"])
            - mp.mpf(dev["E_sen"]) + mp.mpf(dev["E_idle"]))


def uniform_tail(a, b, x):
    a, b = mp.mpf(a), mp.mpf(b)
    if x <= a:
        return mp.mpf(1)
    if x >= b:
        return mp.mpf(0)
    return (b - x) / (b - a)


def pu_factor(sc, dev, m):
    s = sc["sensing"]
    ci = dev["cross_interference"]
    out = mp.mpf(0)
    for n, p in zip(s["sensed_available"], s["p_missed_busy"]):
        out += mp.mpf(p) * mp.mpf(ci[n][m])
    for n, p in zip(s["sensed_unavailable"], s["p_correct_busy"]):
        out += mp.mpf(p) * mp.mpf(ci[n][m])
    return out


def seeded_terms():
    """Assignment (0, 1, 0, 1), mu = (0.6, 0.7) on the fixture."""
    sc = load()
    mus = [0.6, 0.7]
    out = {}
    for k, dev in enumerate(sc["devices"]):
        held = [n for n, owner in enumerate([0, 1, 0, 1]) if owner == k]
        R, t_tr = rate(sc, dev, held, mus[k])
        bits = R * t_tr
        ee = R / consumption(sc, dev, mus[k])
        buf = dev["buffer"]
        tail = uniform_tail(buf["a"], buf["b"], bits)
        out[k] = {
            "rate": R, "bits": bits, "ee": ee, "tail": tail,
            "pu": pu_factor(sc, dev, 0),
        }
    return out


def single_channel_example():
    """H = 2e3, E_tr = 1e-3 J, t_tr = 0.045 s, T = 0.1 s, B = 62.5 kHz."""
    H, e_tr, t_tr, T, B = (mp.mpf(x) for x in ("2e3", "1e-3", "0.045", "0.1", "62500"))
    return (t_tr / T) * B * mp.log(1 + H * e_tr / t_tr, 2)


def dense_grid_argmax(points=1_000_001):
    """User 0 of the fixture holding channels {0, 2}, eta = 0, on a dense mu grid."""
    sc = load()
    dev = sc["devices"][0]
    T, T_d = sc["timing"]["T"], sc["timing"]["T_d"]
    mu_min = max(1e-6, (2 * dev["E_sen"] - dev["E_res"]) / (dev["rho_av"] * T_d))
    mu = np.linspace(mu_min + 1e-6, 1 - 1e-6, points)
    e_tr = dev["E_res"] + dev["rho_av"] * mu * T_d - 2 * dev["E_sen"]
    t_tr = (1 - mu) * T_d
    H = np.array(dev["gains"])[[0, 2]] / (sc["gamma"] * (sc["N0"] + dev["I_k"]))
    R = ((t_tr / T) * sc["B"])[:, None] * np.log2(1 + H * (e_tr / t_tr)[:, None])
    R = R.sum(axis=1)
    ee = R / (dev["rho_av"] * mu * T_d + dev["E_res"] - dev["E_sen"] + dev["E_idle"])
    i = int(np.argmax(ee))
    peaks = int(np.sum((ee[1:-1] > ee[:-2]) & (ee[1:-1] >= ee[2:])))
    return mu[i], peaks


def split_instance():
    """Two users, two channels; user 0 is stronger on both, each floor needs one channel.

    Enumerates the four assignments with a fine per-user mu grid.
    """
    T, T_d, B = 0.1, 0.09, 62500.0
    users = [
        {"rho": 0.08, "gains": [4e-9, 3.5e-9]},
        {"rho": 0.05, "gains": [1e-10, 2e-11]},
    ]
    E_res, E_sen, E_idle, N0 = 3e-3, 2e-3, 1e-6, 1e-13
    floor = 0.1 * 5e4 / T  # coeff 0.1, uniform [0, 1e5] buffer
    grid = np.linspace(0.0, 1.0, 20001)[1:-1]
    best = {}
    for assign in itertools.product(range(2), repeat=2):
        total = 0.0
        for k, u in enumerate(users):
            held = [n for n, owner in enumerate(assign) if owner == k]
            mu_min = max(1e-6, (2 * E_sen - E_res) / (u["rho"] * T_d))
            mu = grid[grid >= mu_min + 1e-6]
            e_tr = E_res + u["rho"] * mu * T_d - 2 * E_sen
            t_tr = (1 - mu) * T_d
            R = np.zeros_like(mu)
            for n in held:
                R += (t_tr / T) * B * np.log2(1 + u["gains"][n] / N0 * e_tr / t_tr)
            ee = R / (u["rho"] * mu * T_d + E_res - E_sen + E_idle) / 1e9
            ok = R >= floor
            total += ee[ok].max() if ok.any() else -np.inf
        best[assign] = total
    return best


if __name__ == "__main__":
    for k, terms in seeded_terms().items():
        print(k, {n: mp.nstr(v, 17) for n, v in terms.items()})
    print("single channel rate", mp.nstr(single_channel_example(), 17))
    print("dense argmax", dense_grid_argmax())
    print("split instance", split_instance())

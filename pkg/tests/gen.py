"""Seeded random problem generators shared by the test and acceptance suites."""

import numpy as np

from roughwaves.fluxes import make_model
from roughwaves.waves import PolymerState, TrafficState

MODELS = {
    "polymer": lambda: make_model("polymer"),
    "polymer_adsorption": lambda: make_model("polymer_adsorption"),
    "polymer_gravity": lambda: make_model("polymer_gravity", gravity_number=3.0),
    "traffic": lambda: make_model("traffic", gamma=1.5),
}


def random_state(model, rng):
    if model.variant == "traffic":
        k = rng.uniform(model.traffic.k_min, min(model.traffic.k_max, 2.5))
        w = rng.uniform(0.8, 4.0)
        v = rng.uniform(0.0, w)
        return TrafficState(model.rho_of(w, v, k), v, k)
    k = rng.uniform(model.polymer.k_min, min(model.polymer.k_max, 3.0))
    return PolymerState(rng.uniform(0.01, 0.99), rng.uniform(0.0, 1.0), k)


def random_riemann(model, rng):
    return random_state(model, rng), random_state(model, rng)


def random_gravity_case1(model, rng):
    """Gravity data with a strictly negative left flux (case-1 dispatch)."""
    g = model.polymer.gravity_number
    while True:
        k_l = rng.uniform(0.5, 2.5)
        s_z = 1.0 - 1.0 / np.sqrt(g * k_l)
        s_l = rng.uniform(0.015, s_z - 0.02)
        L = PolymerState(s_l, rng.uniform(0, 1), k_l)
        if model.f(L.s, L.c, L.k) < -1e-6:
            break
    R = PolymerState(rng.uniform(0.01, 0.99), rng.uniform(0, 1), rng.uniform(0.5, 2.5))
    return L, R


def random_traffic_cauchy(model, rng, max_jumps=6, step=0.025):
    """Piecewise-constant traffic data with moderate jumps around a base state."""
    from roughwaves.simulate import PiecewiseData

    k = 1.0
    n = int(rng.integers(2, max_jumps + 1))
    breaks = np.sort(rng.uniform(-2.0, 2.0, n))
    while np.min(np.diff(breaks), initial=1.0) < 1e-3:
        breaks = np.sort(rng.uniform(-2.0, 2.0, n))
    w = rng.uniform(2.0, 2.4)
    v = rng.uniform(0.8, 1.0)
    states = [TrafficState(model.rho_of(w, v, k), v, k)]
    for _ in range(n):
        w = float(np.clip(w + rng.uniform(-step, step), 1.9, 2.5))
        v = float(np.clip(v + rng.uniform(-step, step), 0.6, 1.2))
        states.append(TrafficState(model.rho_of(w, v, k), v, k))
    return PiecewiseData(breaks=tuple(breaks), states=tuple(states))

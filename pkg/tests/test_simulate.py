import numpy as np
import pytest

from roughwaves.fluxes import make_model
from roughwaves.full3x3 import solve_polymer3
from roughwaves.reduced import solve_traffic2
from roughwaves.simulate import (
    PiecewiseData,
    ScalarConservationModel,
    front_tracking,
    sample_fan,
    viscous_solve,
)
from roughwaves.waves import PolymerState, TrafficState

from gen import random_traffic_cauchy

POL = make_model("polymer")
TRAF = make_model("traffic", gamma=1.5)
BURGERS = ScalarConservationModel(
    fn=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
    dfn=lambda u: np.asarray(u, dtype=float),
)


def tstate(w, v, k=1.0):
    return TrafficState(TRAF.rho_of(w, v, k), v, k)


# ---------------------------------------------------------------- sample_fan


def test_sample_fan_empty_fan():
    L = PolymerState(0.5, 0.5, 1.0)
    fan = solve_polymer3(L, L, POL)
    states = sample_fan(fan, 1.0, [-1.0, 0.0, 2.0])
    assert all(s == L for s in states)


def test_sample_fan_burgers_like_rarefaction():
    fan = solve_traffic2(tstate(3.0, 1.0), tstate(3.0001, 2.0), TRAF)
    # inside the v-rarefaction the characteristic speed equals xi
    w = fan.waves[0]
    xi = 0.5 * (w.speed_left + w.speed_right)
    st = w.state_at(xi)
    lam = st.v - TRAF.gamma * st.k * st.rho**TRAF.gamma
    assert lam == pytest.approx(xi, abs=1e-8)


def test_sample_fan_self_similarity():
    L, R = PolymerState(0.8, 0.2, 1.0), PolymerState(0.3, 0.7, 2.0)
    fan = solve_polymer3(L, R, POL)
    xs = np.linspace(-1.5, 2.5, 301)
    base = sample_fan(fan, 1.0, xs)
    for t in (0.5, 2.0):
        scaled = sample_fan(fan, t, xs * t)
        for a, b in zip(base, scaled):
            assert max(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple())) == 0.0


def test_sample_fan_left_limit_at_shock():
    fan = solve_traffic2(tstate(3.0, 2.0), tstate(3.0, 1.0), TRAF)
    shock = fan.waves[0]
    assert shock.kind == "shock"
    st = fan.state_at(shock.speed)
    assert st == shock.left


# ---------------------------------------------------------------- viscous solver


def test_viscous_constant_data_is_exact():
    L = PolymerState(0.55, 0.4, 1.0)
    run = viscous_solve(POL, PiecewiseData.riemann(L, L), eps=1e-2, cells=256, T=0.5)
    assert np.max(np.abs(run.U[0] - 0.55)) <= 1e-13
    assert np.max(np.abs(run.U[1] - 0.4 * 0.55)) <= 1e-13


def test_viscous_burgers_shock_profile():
    run = viscous_solve(BURGERS, PiecewiseData.riemann(1.0, 0.0), eps=1e-3, cells=8192, T=1.0)
    exact = np.where(run.x < 0.5, 1.0, 0.0)
    l1 = np.sum(np.abs(run.U[0] - exact)) * run.dx
    assert l1 <= 0.02


def test_viscous_polymer_refinement_study():
    L, R = PolymerState(0.75, 0.3, 1.0), PolymerState(0.35, 0.6, 1.6)
    fan = solve_polymer3(L, R, POL)
    data = PiecewiseData.riemann(L, R)
    errs = []
    for eps, cells in [(8e-3, 1024), (4e-3, 2048), (2e-3, 4096)]:
        run = viscous_solve(POL, data, eps=eps, cells=cells, T=1.0)
        errs.append(max(run.l1_distance(fan).values()))
    assert errs[0] > errs[1] > errs[2]


def test_viscous_cfl_guard():
    with pytest.raises(ValueError):
        viscous_solve(BURGERS, PiecewiseData.riemann(1.0, 0.0), eps=1e-6, cells=128, T=0.1)


def test_viscous_mass_conservation_tracking():
    # the interior update telescopes: per-step mass budget closes to roundoff
    L, R = PolymerState(0.7, 0.3, 1.0), PolymerState(0.4, 0.6, 1.0)
    run = viscous_solve(POL, PiecewiseData.riemann(L, R), eps=4e-3, cells=2048, T=0.5)
    assert np.all(np.isfinite(run.U))
    assert run.mass_residual <= 1e-10


# ---------------------------------------------------------------- front tracking


def test_front_tracking_single_datum_no_interactions():
    run = front_tracking(TRAF, PiecewiseData.riemann(tstate(3.0, 1.0), tstate(4.0, 2.0)), 0.01, 5.0)
    assert len(run.events) == 0
    # chopped rarefaction pieces all have |dv| <= eps_frac
    for f in run.fronts:
        if f.family in ("v", "vacuum") and f.left[1] < f.right[1]:
            assert f.right[1] - f.left[1] <= 0.01 + 1e-12


def test_front_tracking_strength_nonincreasing_and_counts():
    rng = np.random.default_rng(8)
    for _ in range(8):
        data = random_traffic_cauchy(TRAF, rng)
        run = front_tracking(TRAF, data, eps_frac=0.01, T=5.0)
        hist = run.strength_history()
        assert all(b <= a + 1e-10 for a, b in zip(hist[:-1], hist[1:]))
        assert run.max_front_count <= run.initial_front_count
        for ev in run.events:
            assert ev.strength_out <= ev.strength_in + 1e-10


def test_front_tracking_vacuum_interaction_cancels():
    # a vacuum fan chased by a fast compression: interaction strictly cancels
    k = 1.0
    data = PiecewiseData(
        breaks=(-1.0, 0.0),
        states=(tstate(2.0, 0.5), tstate(2.0, 2.0), tstate(2.6, 0.4)),
    )
    run = front_tracking(TRAF, data, eps_frac=0.05, T=8.0)
    hist = run.strength_history()
    assert hist[-1] < hist[0] - 1e-6
    cancel = [ev for ev in run.events if ev.strength_out < ev.strength_in - 1e-12]
    assert cancel


def test_front_tracking_rho_v_commutation_preserves_strength():
    # a rho contact catching a slower v shock: strengths exactly exchanged
    data = PiecewiseData(
        breaks=(-1.0, 0.0),
        states=(tstate(2.0, 1.2), tstate(2.4, 1.2), tstate(2.4, 0.6)),
    )
    run = front_tracking(TRAF, data, eps_frac=0.01, T=10.0)
    assert run.events  # the contact at speed 1.2 overtakes the v shock
    for ev in run.events:
        assert ev.strength_out <= ev.strength_in + 1e-12
    hist = run.strength_history()
    assert hist[-1] == pytest.approx(hist[0], abs=1e-10)


def test_front_tracking_profile_matches_viscous():
    rng = np.random.default_rng(12)
    data = random_traffic_cauchy(TRAF, rng)
    run = front_tracking(TRAF, data, eps_frac=0.01, T=5.0)
    vis = viscous_solve(TRAF, data, eps=4e-3, cells=8192, T=5.0)
    states = run.sample(5.0, vis.x)
    rho = np.array([s.rho for s in states])
    v = np.array([s.v for s in states])
    U = np.stack([rho, rho * (v + 1.0 * rho**TRAF.gamma)])
    d = np.abs(U - vis.U).sum(axis=1) * vis.dx
    assert float(d.max()) <= 0.05


def test_front_tracking_rho_family_count_conserved():
    # a rho contact and a v wave exchange positions: exactly one rho front
    # enters and exactly one leaves every rho-v interaction
    data = PiecewiseData(
        breaks=(-1.0, 0.0),
        states=(tstate(2.0, 1.2), tstate(2.4, 1.2), tstate(2.4, 0.6)),
    )
    run = front_tracking(TRAF, data, eps_frac=0.01, T=10.0)
    seen = 0
    for ev in run.events:
        if "rho" in ev.families_in and set(ev.families_in) != {"rho"}:
            assert ev.families_in.count("rho") == ev.families_out.count("rho")
            seen += 1
    assert seen >= 1

"""Global Riemann solvers for the full 3x3 systems.

Each solver composes a stationary permeability (road) wave with the matching
reduced 2x2 solver.  For the gravity flux the sign of the concentration wave
decides the composition order; its negative-speed case requires the trace
sets I1/I2 built from ray/level constructions on the dipped flux curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .envelopes import ScalarFn
from .fluxes import DomainError, FluxModel
from .reduced import (
    _check_speed_bounds,
    _polymer_scalar_waves,
    _traffic_scalar_waves,
    fn_flux,
    fn_traffic,
    solve_adsorption2,
    solve_polymer2,
    solve_sk2,
    solve_traffic2,
)
from .envelopes import minimum_jump
from .waves import FanError, PolymerState, TrafficState, Wave, WaveFan


def _match_flux_root(model, f_target, c, k, bracket):
    """Saturation with f(s, c, k) = f_target on a monotone increasing branch."""
    lo, hi = bracket
    flo = model.f(lo, c, k) - f_target
    fhi = model.f(hi, c, k) - f_target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise FanError(
            f"flux level {f_target} not bracketed on [{lo}, {hi}] at c={c}, k={k}"
        )
    return brentq(lambda s: model.f(s, c, k) - f_target, lo, hi, xtol=1e-14)


def _positive_branch_start(model, c, k):
    """Left end of the branch where f >= 0 and increasing (s_z for gravity)."""
    g = model.polymer.gravity_number
    if g * k > 1.0:
        return 1.0 - 1.0 / np.sqrt(g * k)
    return 0.0


# ---------------------------------------------------------------------------
# plain polymer / adsorptive polymer
# ---------------------------------------------------------------------------


def solve_polymer3(left: PolymerState, right: PolymerState, model: FluxModel) -> WaveFan:
    """Global solver without gravity: stationary k-wave then the reduced fan.

    The k-wave's right state (s_m, c_l, k_r) matches the flux of the left
    datum on the monotone branch; the remaining waves have speed >= 0.
    """
    if model.variant not in ("polymer", "polymer_adsorption"):
        raise DomainError(f"variant {model.variant} not handled by solve_polymer3")
    if left == right:
        return WaveFan(model, left, right, (), {"case": "trivial"}).validate()
    reduced = solve_adsorption2 if model.variant == "polymer_adsorption" else solve_polymer2
    if abs(left.k - right.k) < 1e-14:
        fan = reduced(left, right, model)
        return WaveFan(model, left, right, fan.waves, fan.labels).validate()

    f_l = model.f(left.s, left.c, left.k)
    s_m = _match_flux_root(model, f_l, left.c, right.k, (0.0, 1.0))
    mid = PolymerState(s_m, left.c, right.k)
    kwave = Wave("k", "contact", left, mid, 0.0, 0.0)
    tail = reduced(mid, right, model)
    _check_speed_bounds(tail.waves, floor=0.0, what="right of the k-wave")
    labels = {"case": "k_then_reduced", "s_m": s_m, **{f"reduced_{k2}": v for k2, v in tail.labels.items()}}
    return WaveFan(model, left, right, (kwave,) + tail.waves, labels).validate()


def solve_adsorption3(left: PolymerState, right: PolymerState, model: FluxModel) -> WaveFan:
    """Adsorptive variant of :func:`solve_polymer3` (same k-wave step)."""
    if model.variant != "polymer_adsorption":
        raise DomainError("solve_adsorption3 requires the adsorption variant")
    return solve_polymer3(left, right, model)


# ---------------------------------------------------------------------------
# traffic
# ---------------------------------------------------------------------------


def solve_traffic3(left: TrafficState, right: TrafficState, model: FluxModel) -> WaveFan:
    """Two-step global solver for the traffic model with a road jump.

    Step 1 fixes the density-contact's left state from w_l and the right
    datum (vacuum bridged by a Burgers fan in v).  Step 2 solves the scalar
    density law with the road coefficient jumping at x = 0, all at invariant
    w_l: a stationary k-contact plus v-waves located by the minimum-jump
    crossing of the two concave fluxes.
    """
    if model.variant != "traffic":
        raise DomainError("solve_traffic3 requires the traffic variant")
    if left == right:
        return WaveFan(model, left, right, (), {"case": "trivial"}).validate()
    if abs(left.k - right.k) < 1e-14:
        fan = solve_traffic2(left, right, model)
        return WaveFan(model, left, right, fan.waves, fan.labels).validate()
    gamma = model.gamma
    k_l, k_r = left.k, right.k
    w_l = model.w_of(left.rho, left.v, k_l)

    # Step 1: middle state left of the rho-contact
    tail = []
    if w_l >= right.v - 1e-14:
        rho_m = model.rho_of(w_l, right.v, k_r)
        v_m = right.v
        mid = TrafficState(rho_m, v_m, k_r)
        if abs(rho_m - right.rho) > 1e-14 or abs(v_m - right.v) > 1e-14:
            tail.append(Wave("rho", "contact", mid, right, right.v, right.v))
        label = "no_vacuum"
    else:
        rho_m, v_m = 0.0, w_l
        mid = TrafficState(0.0, w_l, k_r)
        m2 = TrafficState(0.0, right.v, k_r)

        def vac_prof(xi):
            return TrafficState(0.0, xi, k_r)

        tail.append(Wave("vacuum", "rarefaction", mid, m2, w_l, right.v, vac_prof))
        if right.rho > 1e-14:
            tail.append(Wave("rho", "contact", m2, right, right.v, right.v))
        label = "vacuum"

    # Step 2: scalar density law with k jumping at x = 0, invariant w = w_l
    g_l = fn_traffic(model, w_l, k_l)
    g_r = fn_traffic(model, w_l, k_r)
    jp = minimum_jump(g_l, g_r, left.rho, rho_m)
    lw = _traffic_scalar_waves(model, g_l, left.rho, jp.s_minus, w_l, k_l)
    rw = _traffic_scalar_waves(model, g_r, jp.s_plus, rho_m, w_l, k_r)
    _check_speed_bounds(lw, ceil=0.0, what="left of the traffic k-contact")
    _check_speed_bounds(rw, floor=0.0, what="right of the traffic k-contact")
    kwave = Wave(
        "k",
        "contact",
        TrafficState(jp.s_minus, w_l - k_l * jp.s_minus**gamma, k_l),
        TrafficState(jp.s_plus, w_l - k_r * jp.s_plus**gamma, k_r),
        0.0,
        0.0,
    )
    waves = tuple(lw) + (kwave,) + tuple(rw) + tuple(tail)
    return WaveFan(
        model, left, right, waves, {"case": label, "rho_m": rho_m, "v_m": v_m}
    ).validate()


# ---------------------------------------------------------------------------
# gravity: c-wave sign, trace sets, global solver
# ---------------------------------------------------------------------------


def c_wave_sign(left: PolymerState, model: FluxModel) -> str:
    """Sign of the concentration wave speed for the gravity system."""
    if left.s <= 0.0:
        return "negative"
    f_l = model.f(left.s, left.c, left.k)
    if abs(f_l) <= 1e-12:
        return "zero"
    return "negative" if f_l < 0.0 else "positive"


@dataclass(frozen=True)
class TraceSet:
    """Admissible middle-trace saturations: intervals plus isolated points.

    Interval ends carry open/closed flags; isolated points are exact roots
    of the ray/level constructions.  ``case`` records which geometric recipe
    produced the set.
    """

    label: str
    intervals: tuple = ()  # ((lo, hi, lo_closed, hi_closed), ...)
    points: tuple = ()
    case: str = ""

    def contains(self, s, tol=1e-12):
        for lo, hi, locl, hicl in self.intervals:
            above = s > lo + tol or (locl and s >= lo - tol)
            below = s < hi - tol or (hicl and s <= hi + tol)
            if above and below:
                return True
        return any(abs(s - p) <= max(tol, 1e-9) for p in self.points)

    def intersect_points(self, other, tol=1e-9):
        """Points of self ∩ other up to tol (interval overlaps included)."""
        pts = []
        for p in self.points:
            if other.contains(p, tol):
                pts.append(p)
        for p in other.points:
            if self.contains(p, tol) and all(abs(p - q) > tol for q in pts):
                pts.append(p)
        for lo1, hi1, *_ in self.intervals:
            for lo2, hi2, *_ in other.intervals:
                lo, hi = max(lo1, lo2), min(hi1, hi2)
                if hi - lo > tol:
                    pts.append(0.5 * (lo + hi))  # nondegenerate overlap: flagged upstream
                elif hi >= lo - tol:
                    p = 0.5 * (lo + hi)
                    if self.contains(p, 10 * tol) and other.contains(p, 10 * tol):
                        if all(abs(p - q) > tol for q in pts):
                            pts.append(p)
        return sorted(pts)

    def describe(self):
        parts = [
            f"{'[' if locl else '('}{lo:.9g}, {hi:.9g}{']' if hicl else ')'}"
            for lo, hi, locl, hicl in self.intervals
        ]
        parts += [f"{{{p:.9g}}}" for p in self.points]
        return f"{self.label} = " + (" U ".join(parts) if parts else "empty")


def _dip_bottom(fobj: ScalarFn):
    """Interior minimum of a dipped flux curve (its unique critical point)."""
    crit = [p for p in fobj.critical]
    if len(crit) != 1:
        raise FanError(
            f"gravity flux does not have the single-dip shape (criticals: {crit})"
        )
    return crit[0]


def _ray_tangent_point(fobj: ScalarFn, what):
    """Dip tangent point of the ray slope s -> f(s)/s (its interior minimum
    with negative value)."""
    xs = np.linspace(1e-6, 1.0, 513)
    g = np.asarray(fobj(xs), dtype=float) / xs
    i = int(np.argmin(g))
    if g[i] >= 0.0 or i in (0, len(xs) - 1):
        raise FanError(f"{what}: no negative ray-tangent point (flux shape unexpected)")

    def dg(s):
        return float(fobj.deriv(s)) * s - float(fobj(s))

    return brentq(dg, xs[max(i - 2, 0)], xs[min(i + 2, len(xs) - 1)], xtol=1e-14)


def _ray_hit(fobj: ScalarFn, slope, what, rising_from=None):
    """Intersection of the ray y = slope*s with f on the rising branch of
    f/s (from the ray-tangent point up to the flux zero)."""
    lo = rising_from if rising_from is not None else _ray_tangent_point(fobj, what)
    hi = _level_hit(fobj, 0.0, (_dip_bottom(fobj), 1.0), what + " zero")

    def resid(s):
        return float(fobj(s)) / s - slope

    rlo, rhi = resid(lo), resid(hi)
    if rlo == 0.0:
        return lo
    if rhi == 0.0:
        return hi
    if rlo * rhi > 0:
        raise FanError(f"{what}: ray with slope {slope} misses the rising branch [{lo}, {hi}]")
    return brentq(resid, lo, hi, xtol=1e-14)


def _level_hit(fobj: ScalarFn, level, bracket, what):
    lo, hi = bracket

    def resid(s):
        return float(fobj(s)) - level

    rlo, rhi = resid(lo), resid(hi)
    if rlo == 0.0:
        return lo
    if rhi == 0.0:
        return hi
    if rlo * rhi > 0:
        raise FanError(f"{what}: level {level} not attained on [{lo}, {hi}]")
    return brentq(resid, lo, hi, xtol=1e-14)


def build_I1(s_l: float, f_l: ScalarFn, f_m: ScalarFn) -> TraceSet:
    """Trace saturations solving the left reduced problem with negative speeds.

    Case split on the in-dip ordering of the two dipped fluxes; each case is
    a ray/level construction giving (0, s1) plus an isolated point s2, or
    (0, s_hat] when the left datum sits below the critical collinearity.
    """
    bot_l = _dip_bottom(f_l)
    bot_m = _dip_bottom(f_m)
    in_dip_l_above = float(f_l(0.5 * (bot_l + bot_m))) > float(f_m(0.5 * (bot_l + bot_m)))

    if in_dip_l_above:
        s_hat = _ray_tangent_point(f_l, "I1 tangent")
        pivot = s_l if s_l >= s_hat else s_hat
        slope = float(f_l(pivot)) / pivot
        case = "f_l>f_m," + ("s_l>=s_hat" if s_l >= s_hat else "s_l<=s_hat")
        return _i1_from_ray(f_m, slope, bot_m, case)
    # dip of f_l below f_m
    s_hat = bot_m  # f_m'(s_hat) = 0
    slope_hat = float(f_m(s_hat)) / s_hat
    s_tilde = _ray_hit(f_l, slope_hat, "I1 critical collinearity")
    if s_l >= s_tilde:
        slope = float(f_l(s_l)) / s_l
        return _i1_from_ray(f_m, slope, bot_m, "f_l<f_m,s_l>=s_tilde")
    return TraceSet(
        label="I1",
        intervals=((0.0, s_hat, False, True),),
        case="f_l<f_m,s_l<=s_tilde",
    )


def _i1_from_ray(f_m, slope, bot_m, case):
    """Assemble I1 from the collinearity landing point on the middle flux.

    A landing on the rising branch of f_m gives (0, s1) plus the isolated
    point s2; a landing at or before the dip bottom is absorbed by a
    negative-speed rarefaction reaching the bottom: (0, bot] (the bottom is
    attained by a rarefaction, so it belongs to the set)."""
    s2 = _ray_hit(f_m, slope, "I1 collinearity")
    if s2 <= bot_m + 1e-12:
        return TraceSet(
            label="I1",
            intervals=((0.0, bot_m, False, True),),
            case=case + ",landing<=dip",
        )
    s1 = _level_hit(f_m, float(f_m(s2)), (0.0, bot_m), "I1 level match")
    return TraceSet(
        label="I1",
        intervals=((0.0, s1, False, False),),
        points=(s2,),
        case=case,
    )


def build_I2(s_r: float, f_m: ScalarFn, f_r: ScalarFn) -> TraceSet:
    """Trace saturations solving the right reduced problem with speeds >= 0.

    Mirror construction of :func:`build_I1` on the stationary-wave side:
    [s_hat, 1] when the right datum sits beyond the critical level, else
    [s2, 1] plus the isolated point s1 from level matching.
    """
    bot_m = _dip_bottom(f_m)
    bot_r = _dip_bottom(f_r)
    mid = 0.5 * (bot_m + bot_r)
    m_above = float(f_m(mid)) > float(f_r(mid))

    if m_above:
        s_hat = bot_m
        level = float(f_m(s_hat))
        s_tilde = _level_hit(f_r, level, (0.0, bot_r), "I2 critical level")
        if s_r >= s_tilde:
            return TraceSet(
                label="I2", intervals=((s_hat, 1.0, True, True),), case="f_m>f_r,s_r>=s_tilde"
            )
        level = float(f_r(s_r))
        s1 = _level_hit(f_m, level, (0.0, bot_m), "I2 level match low")
        s2 = _level_hit(f_m, level, (bot_m, 1.0), "I2 level match high")
        return TraceSet(
            label="I2",
            intervals=((s2, 1.0, True, True),),
            points=(s1,),
            case="f_m>f_r,s_r<=s_tilde",
        )
    s_hat = bot_r
    if s_r >= s_hat:
        level = float(f_r(s_hat))
    else:
        level = float(f_r(s_r))
    s1 = _level_hit(f_m, level, (0.0, bot_m), "I2 level match low")
    s2 = _level_hit(f_m, level, (bot_m, 1.0), "I2 level match high")
    case = "f_m<f_r," + ("s_r>=s_hat" if s_r >= s_hat else "s_r<=s_hat")
    return TraceSet(
        label="I2",
        intervals=((s2, 1.0, True, True),),
        points=(s1,),
        case=case,
    )


def solve_gravity3(left: PolymerState, right: PolymerState, model: FluxModel) -> WaveFan:
    """Global solver for the gravity system, dispatching on the c-wave sign.

    negative: trace from the singleton I1 ∩ I2, reduced fans split strictly
    around x = 0.  positive: single stationary k-wave matched on the
    positive increasing branch, then the reduced c/s fan.  zero: combined
    c+k stationary wave at the flux zero.
    """
    if model.variant != "polymer_gravity":
        raise DomainError("solve_gravity3 requires the gravity variant")
    if left == right:
        return WaveFan(model, left, right, (), {"case": "trivial"}).validate()
    sign = c_wave_sign(left, model)

    if sign == "positive":
        f_l = model.f(left.s, left.c, left.k)
        lo = _positive_branch_start(model, left.c, right.k)
        s_m = _match_flux_root(model, f_l, left.c, right.k, (lo, 1.0))
        mid = PolymerState(s_m, left.c, right.k)
        waves = () if abs(left.k - right.k) < 1e-14 and abs(s_m - left.s) < 1e-14 else (
            Wave("k", "contact", left, mid, 0.0, 0.0),
        )
        tail = solve_polymer2(mid, right, model)
        _check_speed_bounds(tail.waves, floor=0.0, what="gravity case 2 tail")
        return WaveFan(
            model, left, right, waves + tail.waves, {"case": "positive", "s_m": s_m}
        ).validate()

    if sign == "zero":
        lo = _positive_branch_start(model, right.c, right.k)
        if lo <= 0.0:
            raise FanError("stationary c-wave requires a dipped flux on the right")
        mid = PolymerState(lo, right.c, right.k)
        ck = Wave("ck", "contact", left, mid, 0.0, 0.0)
        tail = _polymer_scalar_waves(
            model, fn_flux(model, right.c, right.k), lo, right.s, right.c, right.k
        )
        _check_speed_bounds(tail, floor=0.0, what="gravity case 3 tail")
        return WaveFan(
            model, left, right, (ck,) + tuple(tail), {"case": "zero", "s_m": lo}
        ).validate()

    f_l = fn_flux(model, left.c, left.k)
    f_m = fn_flux(model, right.c, left.k)
    f_r = fn_flux(model, right.c, right.k)
    I1 = build_I1(left.s, f_l, f_m)
    I2 = build_I2(right.s, f_m, f_r)
    pts = I1.intersect_points(I2)
    if len(pts) != 1:
        raise FanError(
            "trace intersection not a singleton: "
            f"{I1.describe()} vs {I2.describe()} -> {pts}"
        )
    s_m = pts[0]
    if float(f_m(s_m)) >= 0.0:
        raise FanError(f"gravity trace has nonnegative middle flux f_m({s_m})")
    r1 = solve_polymer2(left, PolymerState(s_m, right.c, left.k), model)
    _check_speed_bounds(r1.waves, ceil=0.0, what="gravity case 1 left block")
    r2 = solve_sk2(
        PolymerState(s_m, right.c, left.k), PolymerState(right.s, right.c, right.k), model
    )
    _check_speed_bounds(r2.waves, floor=0.0, what="gravity case 1 right block")
    labels = {
        "case": "negative",
        "s_m": s_m,
        "I1": I1.describe(),
        "I2": I2.describe(),
        "I1_case": I1.case,
        "I2_case": I2.case,
    }
    return WaveFan(model, left, right, r1.waves + r2.waves, labels).validate()

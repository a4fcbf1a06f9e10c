"""Riemann solvers for the reduced 2x2 systems.

* ``solve_polymer2``    -- saturation/concentration system at fixed k, for
  both the plain and the gravity flux (the c-wave is a contact located by
  the minimum-jump crossing of f/s envelopes),
* ``solve_adsorption2`` -- adsorptive variant: c-shocks via f/(s+a)
  envelopes, c-rarefactions by integrating the concentration eigenvector
  field,
* ``solve_traffic2``    -- the second-order traffic model at fixed k in the
  (w, v) invariant plane, including the vacuum construction,
* ``solve_sk2``         -- saturation/permeability system at fixed c: a
  stationary permeability wave located by the minimum-jump crossing of the
  fluxes themselves, plus sign-split saturation fans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .envelopes import ScalarFn, minimum_jump, scalar_riemann
from .fluxes import DomainError, FluxModel
from .waves import FanError, PolymerState, TrafficState, Wave, WaveFan

SPEED_SLACK = 1e-9


# ---------------------------------------------------------------------------
# scalar-function builders
# ---------------------------------------------------------------------------


def fn_flux(model: FluxModel, c, k) -> ScalarFn:
    """s -> f(s, c, k) on [0, 1]."""
    return ScalarFn(
        lambda s: model.f(s, c, k),
        lambda s: model.f_s(s, c, k),
        (0.0, 1.0),
    )


def fn_g_contact(model: FluxModel, c, k, shift=0.0) -> ScalarFn:
    """s -> f(s, c, k) / (s + shift); shift = 0 extends by continuity at 0."""

    c_f = float(c)
    k_f = float(k)

    def g(s):
        if type(s) is float or np.isscalar(s):
            s = float(s)
            f = model.f(s, c_f, k_f)
            if shift > 0.0:
                return f / (s + shift)
            return f / s if s > 0.0 else 0.0
        s = np.asarray(s, dtype=float)
        f = np.asarray(model.f(s, c, k), dtype=float)
        den = s + shift
        if shift > 0.0:
            out = f / den
        else:
            out = np.where(s > 0.0, f / np.where(s > 0.0, s, 1.0), 0.0)
        return out if out.ndim else float(out)

    def dg(s):
        if type(s) is float or np.isscalar(s):
            s = float(s)
            fs = model.f_s(s, c_f, k_f)
            if shift > 0.0:
                return (fs - g(s)) / (s + shift)
            return (fs - g(max(s, 0.0))) / max(s, 1e-9)
        s = np.asarray(s, dtype=float)
        fs = np.asarray(model.f_s(s, c, k), dtype=float)
        if shift > 0.0:
            out = (fs - g(s)) / (s + shift)
        else:
            safe = np.maximum(s, 1e-9)
            out = (fs - g(np.maximum(s, 0.0))) / safe
        return out if out.ndim else float(out)

    return ScalarFn(g, dg, (0.0, 1.0))


def fn_traffic(model: FluxModel, w, k) -> ScalarFn:
    """rho -> rho (w - k rho^gamma) on the admissible range [0, (w/k)^(1/gamma)]."""
    hi = model.rho_stagnation(w, k)
    return ScalarFn(
        lambda r: model.g_traffic(r, w, k),
        lambda r: model.g_traffic_drho(r, w, k),
        (0.0, max(hi, 1e-12)),
    )


# ---------------------------------------------------------------------------
# wave assembly helpers
# ---------------------------------------------------------------------------


def _polymer_scalar_waves(model, fobj, s_a, s_b, c, k):
    """Wrap a scalar fan between saturations into s-family waves."""
    waves = []
    for sw in scalar_riemann(fobj, s_a, s_b):
        left = PolymerState(sw.u_left, c, k)
        right = PolymerState(sw.u_right, c, k)
        if sw.kind == "shock":
            waves.append(Wave("s", "shock", left, right, sw.speed, sw.speed))
        else:
            prof = _polymer_profile(sw, c, k)
            waves.append(
                Wave("s", "rarefaction", left, right, sw.speed_left, sw.speed_right, prof)
            )
    return waves


def _polymer_profile(sw, c, k):
    def prof(xi):
        return PolymerState(float(sw.profile(xi)), c, k)

    return prof


def _traffic_scalar_waves(model, gobj, r_a, r_b, w, k):
    """Wrap a density fan at fixed invariant w into v-family waves."""
    waves = []
    for sw in scalar_riemann(gobj, r_a, r_b):
        left = TrafficState(sw.u_left, w - k * sw.u_left**model.gamma, k)
        right = TrafficState(sw.u_right, w - k * sw.u_right**model.gamma, k)
        if sw.kind == "shock":
            waves.append(Wave("v", "shock", left, right, sw.speed, sw.speed))
        else:
            gamma = model.gamma

            def prof(xi, sw=sw):
                r = float(sw.profile(xi))
                return TrafficState(r, w - k * r**gamma, k)

            waves.append(
                Wave("v", "rarefaction", left, right, sw.speed_left, sw.speed_right, prof)
            )
    return waves


def _check_speed_bounds(waves, floor=None, ceil=None, what=""):
    for w in waves:
        if floor is not None and w.speed_left < floor - SPEED_SLACK:
            raise FanError(f"{what}: wave speed {w.speed_left} below {floor}")
        if ceil is not None and w.speed_right > ceil + SPEED_SLACK:
            raise FanError(f"{what}: wave speed {w.speed_right} above {ceil}")


# ---------------------------------------------------------------------------
# plain polymer (and gravity type-1) reduced solver
# ---------------------------------------------------------------------------


def solve_polymer2(left: PolymerState, right: PolymerState, model: FluxModel) -> WaveFan:
    """Riemann solver for the s/c system at fixed permeability.

    The concentration contact is located by the minimum-jump crossing of the
    f/s envelopes; saturation fans are patched on both sides with speeds
    sorted around the contact.  Valid for the plain flux and the gravity
    flux (negative speeds allowed).
    """
    if abs(left.k - right.k) > 1e-14:
        raise DomainError("solve_polymer2 requires a common permeability")
    k = left.k
    if left == right:
        return WaveFan(model, left, right, (), {"case": "trivial"}).validate()
    if abs(left.c - right.c) < 1e-14:
        waves = _polymer_scalar_waves(model, fn_flux(model, left.c, k), left.s, right.s, left.c, k)
        return WaveFan(model, left, right, tuple(waves), {"case": "pure_s"}).validate()

    g_l = fn_g_contact(model, left.c, k)
    g_r = fn_g_contact(model, right.c, k)
    jp = minimum_jump(g_l, g_r, left.s, right.s)
    sigma = jp.sigma

    lw = _polymer_scalar_waves(model, fn_flux(model, left.c, k), left.s, jp.s_minus, left.c, k)
    rw = _polymer_scalar_waves(model, fn_flux(model, right.c, k), jp.s_plus, right.s, right.c, k)
    _check_speed_bounds(lw, ceil=sigma, what="left of c-contact")
    _check_speed_bounds(rw, floor=sigma, what="right of c-contact")
    cwave = Wave(
        "c",
        "contact",
        PolymerState(jp.s_minus, left.c, k),
        PolymerState(jp.s_plus, right.c, k),
        sigma,
        sigma,
    )
    waves = tuple(lw) + (cwave,) + tuple(rw)
    return WaveFan(model, left, right, waves, {"case": "c_contact", "sigma": sigma}).validate()


# ---------------------------------------------------------------------------
# saturation/permeability (type-2) reduced solver
# ---------------------------------------------------------------------------


def solve_sk2(left: PolymerState, right: PolymerState, model: FluxModel) -> WaveFan:
    """Riemann solver for the s/k system at fixed concentration.

    The stationary permeability wave is the minimum-jump crossing of the two
    fluxes themselves (flux stays continuous across it); saturation waves
    split into negative speeds on the left and nonnegative on the right.
    """
    if abs(left.c - right.c) > 1e-14:
        raise DomainError("solve_sk2 requires a common concentration")
    c = left.c
    if left == right:
        return WaveFan(model, left, right, (), {"case": "trivial"}).validate()
    f_l = fn_flux(model, c, left.k)
    if abs(left.k - right.k) < 1e-14:
        waves = _polymer_scalar_waves(model, f_l, left.s, right.s, c, left.k)
        return WaveFan(model, left, right, tuple(waves), {"case": "pure_s"}).validate()

    f_r = fn_flux(model, c, right.k)
    jp = minimum_jump(f_l, f_r, left.s, right.s)
    lw = _polymer_scalar_waves(model, f_l, left.s, jp.s_minus, c, left.k)
    rw = _polymer_scalar_waves(model, f_r, jp.s_plus, right.s, c, right.k)
    _check_speed_bounds(lw, ceil=0.0, what="left of k-wave")
    _check_speed_bounds(rw, floor=0.0, what="right of k-wave")
    kwave = Wave(
        "k",
        "contact",
        PolymerState(jp.s_minus, c, left.k),
        PolymerState(jp.s_plus, c, right.k),
        0.0,
        0.0,
    )
    waves = tuple(lw) + (kwave,) + tuple(rw)
    return WaveFan(
        model, left, right, waves, {"case": "k_wave", "flux_level": jp.sigma}
    ).validate()


# ---------------------------------------------------------------------------
# traffic reduced solver in the (w, v) plane
# ---------------------------------------------------------------------------


def solve_traffic2(left: TrafficState, right: TrafficState, model: FluxModel) -> WaveFan:
    """Riemann solver for the second-order traffic model at fixed road k.

    With m = (w_l, v_r) right of the vacuum line the solution is a v-wave
    (shock for v_l > v_r, rarefaction otherwise) followed by a density
    contact at speed v_r.  Otherwise the middle state hits vacuum and a
    Burgers fan in v bridges w_l up to v_r at zero density.
    """
    if abs(left.k - right.k) > 1e-14:
        raise DomainError("solve_traffic2 requires a common road coefficient")
    k = left.k
    gamma = model.gamma
    _check_traffic_state(left, model)
    _check_traffic_state(right, model)
    if left == right:
        return WaveFan(model, left, right, (), {"case": "trivial"}).validate()
    w_l = model.w_of(left.rho, left.v, k)

    waves = []
    if right.v <= w_l + 1e-14:
        rho_m = model.rho_of(w_l, right.v, k)
        mid = TrafficState(rho_m, right.v, k)
        waves += _v_wave(left, mid, model)
        if abs(mid.rho - right.rho) > 1e-14:
            waves.append(Wave("rho", "contact", mid, right, right.v, right.v))
        label = "no_vacuum"
    else:
        m1 = TrafficState(0.0, w_l, k)
        m2 = TrafficState(0.0, right.v, k)
        waves += _v_wave(left, m1, model)
        waves.append(_vacuum_wave(m1, m2, k))
        if right.rho > 1e-14:
            waves.append(Wave("rho", "contact", m2, right, right.v, right.v))
        label = "vacuum"
    waves = [w for w in waves if w is not None]
    return WaveFan(model, left, right, tuple(waves), {"case": label}).validate()


def _check_traffic_state(state, model):
    if state.rho < -1e-12 or state.v < -1e-12:
        raise DomainError(f"inadmissible traffic state {state}")


def _v_wave(left: TrafficState, right: TrafficState, model: FluxModel):
    """v-family wave along constant w between two states (possibly empty)."""
    if abs(left.v - right.v) < 1e-14 and abs(left.rho - right.rho) < 1e-14:
        return []
    k = left.k
    gamma = model.gamma
    w = model.w_of(left.rho, left.v, k)
    if left.v > right.v:  # compression: shock
        num = right.rho * right.v - left.rho * left.v
        den = right.rho - left.rho
        sigma = num / den
        return [Wave("v", "shock", left, right, sigma, sigma)]
    lam_l = left.v - gamma * k * left.rho**gamma
    lam_r = right.v - gamma * k * right.rho**gamma

    def prof(xi):
        rho = ((w - xi) / ((gamma + 1.0) * k)) ** (1.0 / gamma)
        return TrafficState(rho, w - k * rho**gamma, k)

    return [Wave("v", "rarefaction", left, right, lam_l, lam_r, prof)]


def _vacuum_wave(m1: TrafficState, m2: TrafficState, k):
    """Burgers fan in v across a vacuum interval (rho = 0 throughout)."""
    if abs(m1.v - m2.v) < 1e-14:
        return None

    def prof(xi):
        return TrafficState(0.0, xi, k)

    return Wave("vacuum", "rarefaction", m1, m2, m1.v, m2.v, prof)


# ---------------------------------------------------------------------------
# adsorptive polymer reduced solver
# ---------------------------------------------------------------------------


def lambda_c_adsorption(model, s, c, k):
    """Concentration characteristic speed f / (s + m'(c))."""
    s, c, k = float(s), float(c), float(k)
    return model.f(s, c, k) / (s + model.m_prime(c))


def _resonance_gap(model, s, c, k):
    s, c, k = float(s), float(c), float(k)
    return model.f_s(s, c, k) - lambda_c_adsorption(model, s, c, k)


def resonance_point(model, c, k, lo=1e-4):
    """Saturation where lambda_s = lambda_c at level c (unique interior root)."""
    from scipy.optimize import brentq

    glo = _resonance_gap(model, lo, c, k)
    ghi = _resonance_gap(model, 1.0, c, k)
    if glo <= 0.0 or ghi >= 0.0:
        raise FanError("resonance locus not bracketed; flux shape unexpected")
    return brentq(lambda s: _resonance_gap(model, s, c, k), lo, 1.0, xtol=1e-14)


@dataclass
class _CPath:
    """A concentration integral curve parametrised by s: c = c(s).

    s_foot is the endpoint at level c_from, s_exit at level c_to (when the
    curve survives; otherwise exit is where it died at the resonance locus).
    """

    sol: object
    s_foot: float
    s_exit: float
    c_from: float
    c_to: float
    survived: bool

    def c_of_s(self, s):
        lo, hi = sorted((self.s_foot, self.s_exit))
        return float(self.sol.sol(min(max(s, lo), hi))[0])

    def exit_speed(self, model, k):
        return lambda_c_adsorption(model, self.s_exit, self.c_to, k)

    def state_of_xi(self, model, xi, k):
        lo, hi = sorted((self.s_foot, self.s_exit))
        la = lambda_c_adsorption(model, lo, self.c_of_s(lo), k)
        lb = lambda_c_adsorption(model, hi, self.c_of_s(hi), k)
        a, b = (lo, hi) if la <= lb else (hi, lo)
        for _ in range(100):
            m = 0.5 * (a + b)
            if lambda_c_adsorption(model, m, self.c_of_s(m), k) < xi:
                a = m
            else:
                b = m
            if abs(b - a) < 1e-15:
                break
        s = 0.5 * (a + b)
        return PolymerState(s, self.c_of_s(s), k)


@dataclass
class _GlidePath:
    """A branch piece that dies on the resonance locus at level c_star and
    continues gliding along the locus (both characteristic speeds equal
    there) up to the target level.
    """

    branch: _CPath
    model: object
    k: float
    c_star: float
    c_to: float
    s_exit: float
    survived: bool = True

    @property
    def s_foot(self):
        return self.branch.s_foot

    @property
    def c_from(self):
        return self.branch.c_from

    def glide_speed(self, c):
        s = resonance_point(self.model, c, self.k)
        return lambda_c_adsorption(self.model, s, c, self.k)

    def exit_speed(self, model, k):
        return self.glide_speed(self.c_to)

    def state_of_xi(self, model, xi, k):
        lam_star = self.glide_speed(self.c_star)
        if xi <= lam_star:
            return self.branch.state_of_xi(model, xi, k)
        a, b = self.c_star, self.c_to
        for _ in range(100):
            m = 0.5 * (a + b)
            if self.glide_speed(m) < xi:
                a = m
            else:
                b = m
            if abs(b - a) < 1e-14:
                break
        c = 0.5 * (a + b)
        return PolymerState(resonance_point(model, c, k), c, k)


def _conjugate_point(model, s, c, k):
    """The saturation on the other monotone branch of lambda_c(., c) at the
    same characteristic speed (the chord through (-m'(c), 0)); None if the
    level is not attained there."""
    from scipy.optimize import brentq

    lam = lambda_c_adsorption(model, s, c, k)
    s_hat = resonance_point(model, c, k)
    if s < s_hat:
        lo, hi = s_hat, 1.0
    else:
        lo, hi = 1e-12, s_hat

    def resid(t):
        return lambda_c_adsorption(model, t, c, k) - lam

    rlo, rhi = resid(lo), resid(hi)
    if rlo * rhi > 0:
        return None
    return brentq(resid, lo, hi, xtol=1e-14)


def _glide_continuation(model, branch: _CPath, c_target, k):
    """Extend a path that died on the resonance locus by a glide segment."""
    if branch is None or branch.survived:
        return None
    c_star = branch.c_of_s(branch.s_exit)
    if not branch.c_from < c_star < c_target:
        return None
    cs = np.linspace(c_star, c_target, 33)
    lams = []
    for c in cs:
        s_hat = resonance_point(model, c, k)
        lams.append(lambda_c_adsorption(model, s_hat, c, k))
    if np.any(np.diff(lams) <= 0.0):
        return None  # glide speeds must increase for a valid fan
    return _GlidePath(
        branch=branch,
        model=model,
        k=k,
        c_star=c_star,
        c_to=c_target,
        s_exit=resonance_point(model, c_target, k),
    )


def _c_path_between(model, s_start, c_start, c_target, k, s_bound=None):
    """Integrate dc/ds = (lambda_c - lambda_s)/f_c from (s_start, c_start).

    The s parametrisation stays regular through the resonance locus, where
    dc/ds vanishes.  Marches s upward on the slow (left) branch and downward
    on the fast (right) branch; stops at c = c_target (survival) or at the
    resonance turning point (death).
    """
    gap0 = _resonance_gap(model, s_start, c_start, k)
    if gap0 == 0.0 or c_target == c_start:
        return None
    # slow branch (gap > 0): c grows with s; fast branch: c falls with s
    upward = (gap0 > 0.0) == (c_target > c_start)

    def rhs(s, y):
        s = float(s)
        c = float(min(max(y[0], 0.0), 1.0))
        fc = model.f_c(s, c, k)
        if abs(fc) < 1e-300:
            return [0.0]
        return [-_resonance_gap(model, s, c, k) / fc]

    def hit_target(s, y):
        return y[0] - c_target

    hit_target.terminal = True

    def hit_resonance(s, y):
        return _resonance_gap(model, float(s), float(min(max(y[0], 0.0), 1.0)), k)

    hit_resonance.terminal = True

    s_end = (1.0 - 1e-9) if upward else 1e-12
    if s_bound is not None:
        s_end = s_bound
    sol = solve_ivp(
        rhs,
        (s_start, s_end),
        [c_start],
        rtol=1e-10,
        atol=1e-12,
        dense_output=True,
        events=[hit_target, hit_resonance],
        max_step=0.02,
    )
    if not sol.success and sol.status != 1:
        return None
    survived = sol.status == 1 and len(sol.t_events[0]) > 0
    s_exit = float(sol.t_events[0][0]) if survived else float(sol.t[-1])
    return _CPath(
        sol=sol,
        s_foot=s_start,
        s_exit=s_exit,
        c_from=c_start,
        c_to=c_target,
        survived=survived,
    )


def solve_adsorption2(left: PolymerState, right: PolymerState, model: FluxModel) -> WaveFan:
    """Riemann solver for the adsorptive s/c system at fixed permeability.

    c_l > c_r produces a c-shock located by the minimum-jump crossing of
    f/(s+a) envelopes with a the adsorption chord slope; c_l < c_r produces
    a c-rarefaction along the concentration eigenvector field, its foot
    selected so the entry and exit saturation fans attach with ordered
    speeds (monotone shooting on the envelope contact set).
    """
    if abs(left.k - right.k) > 1e-14:
        raise DomainError("solve_adsorption2 requires a common permeability")
    k = left.k
    if left == right:
        return WaveFan(model, left, right, (), {"case": "trivial"}).validate()
    if abs(left.c - right.c) < 1e-14:
        waves = _polymer_scalar_waves(model, fn_flux(model, left.c, k), left.s, right.s, left.c, k)
        return WaveFan(model, left, right, tuple(waves), {"case": "pure_s"}).validate()

    if left.c > right.c:
        m_l = model.m(left.c)[0]
        m_r = model.m(right.c)[0]
        a = (m_l - m_r) / (left.c - right.c)
        g_l = fn_g_contact(model, left.c, k, shift=a)
        g_r = fn_g_contact(model, right.c, k, shift=a)
        jp = minimum_jump(g_l, g_r, left.s, right.s)
        sigma = jp.sigma
        lw = _polymer_scalar_waves(model, fn_flux(model, left.c, k), left.s, jp.s_minus, left.c, k)
        rw = _polymer_scalar_waves(model, fn_flux(model, right.c, k), jp.s_plus, right.s, right.c, k)
        _check_speed_bounds(lw, ceil=sigma, what="left of c-shock")
        _check_speed_bounds(rw, floor=sigma, what="right of c-shock")
        cwave = Wave(
            "c",
            "shock",
            PolymerState(jp.s_minus, left.c, k),
            PolymerState(jp.s_plus, right.c, k),
            sigma,
            sigma,
        )
        waves = tuple(lw) + (cwave,) + tuple(rw)
        return WaveFan(model, left, right, waves, {"case": "c_shock", "sigma": sigma}).validate()

    return _solve_adsorption_rarefaction(left, right, model)


def _fan_maxspeed(waves):
    return waves[-1].speed_right if waves else -np.inf


def _fan_minspeed(waves):
    return waves[0].speed_left if waves else np.inf


def _solve_adsorption_rarefaction(left, right, model):
    """c_l < c_r: single c-rarefaction along the eigenvector field.

    The foot is selected among a short list of attachment regimes, each a
    boundary case of the speed-ordering constraints: entry fan arriving no
    faster than the rarefaction head, exit fan leaving no slower than its
    tail.  Candidates: the left datum itself, the path pinned to exit at the
    resonance point, the path exiting exactly at the right datum, and sonic
    attachments located by bisection on the constraint slacks.
    """
    k = left.k
    c_l, c_r = left.c, right.c
    f_l = fn_flux(model, c_l, k)
    f_r = fn_flux(model, c_r, k)

    def attempt(foot, path=None, glide=False):
        """Build the full fan for a foot; None if any constraint fails."""
        if foot is None or not 0.0 <= foot <= 1.0:
            return None
        if path is None:
            path = _c_path_between(model, foot, c_l, c_r, k)
            if glide and path is not None and not path.survived:
                path = _glide_continuation(model, path, c_r, k)
        if path is None or not path.survived:
            return None
        s_exit = path.s_exit
        lam1 = lambda_c_adsorption(model, foot, c_l, k)
        lam2 = path.exit_speed(model, k)
        if lam2 < lam1 - 1e-10:
            return None
        try:
            lw = _polymer_scalar_waves(model, f_l, left.s, foot, c_l, k)
            rw = _polymer_scalar_waves(model, f_r, s_exit, right.s, c_r, k)
        except RuntimeError:
            return None
        # sonic/pinned attachments land within root-finding accuracy of the
        # exact tangency; absorb sub-1e-6 overlaps into the fan endpoints
        if lw and 0.0 < _fan_maxspeed(lw) - lam1 <= 1e-6:
            lam1 = _fan_maxspeed(lw)
        if rw and 0.0 < lam2 - _fan_minspeed(rw) <= 1e-6:
            lam2 = min(_fan_minspeed(rw), lam2)
        if lam2 < lam1:
            return None
        if _fan_maxspeed(lw) > lam1 + 1e-9 or _fan_minspeed(rw) < lam2 - 1e-9:
            return None
        cwave = _c_rarefaction_wave(model, path, lam1, lam2, k)
        waves = tuple(lw) + (cwave,) + tuple(rw)
        fan = WaveFan(
            model,
            left,
            right,
            waves,
            {"case": "c_rarefaction", "foot": foot, "exit": s_exit},
        )
        try:
            return fan.validate()
        except FanError:
            return None

    # regime: foot at the left datum (no entry fan)
    fan = attempt(left.s)
    if fan is not None:
        return fan

    # regime: exit pinned at the resonance point of the right level
    s_hat = resonance_point(model, c_r, k)
    for exit_s in (s_hat + 1e-9, s_hat - 1e-9, right.s):
        # third entry: exit exactly at the right datum (no exit fan)
        back = _c_path_between(model, exit_s, c_r, c_l, k)
        if back is not None and back.survived:
            fwd = _CPath(
                sol=back.sol,
                s_foot=back.s_exit,
                s_exit=exit_s,
                c_from=c_l,
                c_to=c_r,
                survived=True,
            )
            fan = attempt(back.s_exit, path=fwd)
            if fan is not None:
                return fan

    # regimes: sonic attachment of the entry or exit fan (slack roots)
    fan = _sonic_attachment_search(left, right, model, f_l, f_r, attempt)
    if fan is not None:
        return fan

    # glide regimes: the path dies on the resonance locus before reaching
    # the right level and continues along it (both families sonic there)
    fan = attempt(left.s, glide=True)
    if fan is not None:
        return fan
    fan = _sonic_attachment_search(left, right, model, f_l, f_r, attempt, glide=True)
    if fan is not None:
        return fan

    # hop regimes: the path crosses the resonance locus by an embedded sonic
    # saturation jump along the chord through (-m'(c), 0)
    for foot in _entry_feet(left, model, f_l, k):
        fan = _hop_search(left, right, model, f_l, f_r, foot)
        if fan is not None:
            return fan
    raise FanError(
        "no admissible c-rarefaction construction found: data may require a "
        "composite wave beyond the single-branch construction"
    )


def _entry_feet(left, model, f_l, k):
    """Entry candidates for hop composites: the datum plus sonic-shock feet."""
    feet = [left.s]
    lam_of = lambda s: lambda_c_adsorption(model, s, left.c, k)

    def a_slack(foot):
        try:
            lw = _polymer_scalar_waves(model, f_l, left.s, foot, left.c, k)
        except RuntimeError:
            return None
        return lam_of(foot) - _fan_maxspeed(lw)

    grid = np.linspace(0.0, 1.0, 33)
    vals = [a_slack(s) for s in grid]
    for (p0, v0), (p1, v1) in zip(list(zip(grid, vals))[:-1], list(zip(grid, vals))[1:]):
        if v0 is None or v1 is None or not np.isfinite(v0) or not np.isfinite(v1):
            continue
        if v0 * v1 < 0:
            a, b, fa = p0, p1, v0
            for _ in range(80):
                mid = 0.5 * (a + b)
                vm = a_slack(mid)
                if vm is None:
                    break
                if fa * vm <= 0:
                    b = mid
                else:
                    a, fa = mid, vm
                if b - a < 1e-13:
                    break
            feet.append(0.5 * (a + b))
    return feet


def _hop_search(left, right, model, f_l, f_r, foot, samples=41):
    """Find the hop level c~ such that the composite path lands admissibly."""
    k = left.k
    c_l, c_r = left.c, right.c

    def build(c_hop):
        """Path pieces for a hop at level c_hop; None if not constructible."""
        if not c_l < c_hop < c_r:
            return None
        piece1 = _c_path_between(model, foot, c_l, c_hop, k) if c_hop > c_l else None
        if piece1 is None or not piece1.survived:
            return None
        s_a = piece1.s_exit
        s_b = _conjugate_point(model, s_a, c_hop, k)
        if s_b is None:
            return None
        piece2 = _c_path_between(model, s_b, c_hop, c_r, k)
        if piece2 is None or not piece2.survived:
            return None
        return piece1, s_a, s_b, piece2

    def exit_gap(c_hop):
        parts = build(c_hop)
        if parts is None:
            return None
        return parts[3].s_exit - right.s

    def b_slack(c_hop):
        parts = build(c_hop)
        if parts is None:
            return None
        s_exit = parts[3].s_exit
        lam2 = lambda_c_adsorption(model, s_exit, c_r, k)
        try:
            rw = _polymer_scalar_waves(model, f_r, s_exit, right.s, c_r, k)
        except RuntimeError:
            return None
        return _fan_minspeed(rw) - lam2

    span = c_r - c_l
    grid = np.concatenate(
        [[c_l + 1e-7 * span], np.linspace(c_l, c_r, samples)[1:-1], [c_r - 1e-7 * span]]
    )
    for fun in (exit_gap, b_slack):
        vals = [fun(c) for c in grid]
        for (p0, v0), (p1, v1) in zip(list(zip(grid, vals))[:-1], list(zip(grid, vals))[1:]):
            if v0 is None or v1 is None or not np.isfinite(v0) or not np.isfinite(v1):
                continue
            if v0 * v1 <= 0:
                a, b, fa = p0, p1, v0
                for _ in range(80):
                    mid = 0.5 * (a + b)
                    vm = fun(mid)
                    if vm is None:
                        break
                    if fa * vm <= 0:
                        b = mid
                    else:
                        a, fa = mid, vm
                    if b - a < 1e-14:
                        break
                fan = _attempt_hop(left, right, model, f_l, f_r, foot, 0.5 * (a + b), build)
                if fan is not None:
                    return fan
    return None


def _attempt_hop(left, right, model, f_l, f_r, foot, c_hop, build):
    k = left.k
    c_l, c_r = left.c, right.c
    parts = build(c_hop)
    if parts is None:
        return None
    piece1, s_a, s_b, piece2 = parts
    lam1 = lambda_c_adsorption(model, foot, c_l, k)
    lam_hop = lambda_c_adsorption(model, s_a, c_hop, k)
    lam_hop_b = lambda_c_adsorption(model, s_b, c_hop, k)
    if abs(lam_hop - lam_hop_b) > 1e-8:
        return None
    s_exit = piece2.s_exit
    lam2 = lambda_c_adsorption(model, s_exit, c_r, k)
    if not lam1 - 1e-10 <= lam_hop <= lam2 + 1e-10:
        return None
    try:
        lw = _polymer_scalar_waves(model, f_l, left.s, foot, c_l, k)
        rw = _polymer_scalar_waves(model, f_r, s_exit, right.s, c_r, k)
    except RuntimeError:
        return None
    if lw and 0.0 < _fan_maxspeed(lw) - lam1 <= 1e-6:
        lam1 = _fan_maxspeed(lw)
    if rw and 0.0 < lam2 - _fan_minspeed(rw) <= 1e-6:
        lam2 = _fan_minspeed(rw)
    if _fan_maxspeed(lw) > lam1 + 1e-9 or _fan_minspeed(rw) < lam2 - 1e-9:
        return None
    waves = tuple(lw)
    if lam_hop > lam1 + 1e-13:
        waves += (_c_rarefaction_wave(model, piece1, lam1, lam_hop, k),)
    sigma = 0.5 * (lam_hop + lam_hop_b)
    waves += (
        Wave(
            "s",
            "shock",
            PolymerState(s_a, c_hop, k),
            PolymerState(s_b, c_hop, k),
            sigma,
            sigma,
        ),
    )
    if lam2 > lam_hop + 1e-13:
        waves += (_c_rarefaction_wave(model, piece2, lam_hop_b, lam2, k),)
    waves += tuple(rw)
    fan = WaveFan(
        model,
        left,
        right,
        waves,
        {"case": "c_rarefaction_hop", "foot": foot, "hop_level": c_hop, "exit": s_exit},
    )
    try:
        return fan.validate()
    except FanError:
        return None


def _c_rarefaction_wave(model, path, lam1, lam2, k):
    """Wrap a concentration path into a rarefaction wave with xi-profile."""

    def prof(xi):
        return path.state_of_xi(model, min(max(xi, lam1), lam2), k)

    return Wave(
        "c",
        "rarefaction",
        PolymerState(path.s_foot, path.c_from, k),
        PolymerState(path.s_exit, path.c_to, k),
        lam1,
        lam2,
        prof,
    )


def _sonic_attachment_search(left, right, model, f_l, f_r, attempt, samples=33, glide=False):
    """Bisect the entry/exit ordering slacks over the surviving foot set."""
    k = left.k
    c_l, c_r = left.c, right.c

    def slacks(foot):
        path = _c_path_between(model, foot, c_l, c_r, k)
        if glide and path is not None and not path.survived:
            path = _glide_continuation(model, path, c_r, k)
        if path is None or not path.survived:
            return None
        lam1 = lambda_c_adsorption(model, foot, c_l, k)
        lam2 = path.exit_speed(model, k)
        try:
            lw = _polymer_scalar_waves(model, f_l, left.s, foot, c_l, k)
            rw = _polymer_scalar_waves(model, f_r, path.s_exit, right.s, c_r, k)
        except RuntimeError:
            return None
        return (lam1 - _fan_maxspeed(lw), _fan_minspeed(rw) - lam2)

    feet = np.linspace(0.0, 1.0, samples)
    vals = [slacks(s) for s in feet]
    for idx in (0, 1):
        for (p0, v0), (p1, v1) in zip(list(zip(feet, vals))[:-1], list(zip(feet, vals))[1:]):
            if v0 is None or v1 is None:
                continue
            a, b = p0, p1
            fa, fb = v0[idx], v1[idx]
            if fa == np.inf or fb == np.inf or fa * fb > 0:
                continue
            for _ in range(80):
                m = 0.5 * (a + b)
                vm = slacks(m)
                if vm is None:
                    break
                if vm[idx] * fa <= 0:
                    b = m
                else:
                    a, fa = m, vm[idx]
                if b - a < 1e-13:
                    break
            fan = attempt(0.5 * (a + b), glide=glide)
            if fan is not None:
                return fan
    return None

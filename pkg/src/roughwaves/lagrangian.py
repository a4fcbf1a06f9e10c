"""Lagrangian potential coordinates and decoupling verification.

The potential phi integrates (phi_t, phi_x) = (f, -s) for the polymer
models, (rho v, -rho) for traffic, and the sign-modified pair
(sign(f) f, -sign(f) s) for the gravity flux.  The companion coordinate is
psi = x.  On Riemann solutions the line integral is evaluated with panels
split at the wave rays so each panel integrand is smooth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fluxes import FluxModel
from .simulate import PiecewiseData
from .waves import PolymerState, TrafficState, WaveFan


class DegenerateCoordinateError(RuntimeError):
    """The coordinate change degenerates on the integration path (vacuum)."""


def _phi_components(model: FluxModel, state):
    """(phi_t, phi_x) at a state, with the gravity sign modification."""
    if isinstance(state, TrafficState):
        q = state.rho * state.v
        return q, -state.rho
    f = model.f(state.s, state.c, state.k)
    if model.variant == "polymer_gravity":
        sgn = 1.0 if f >= 0.0 else -1.0
        return sgn * f, -sgn * state.s
    return f, -state.s


def _advected_coordinate(state):
    return state.rho if isinstance(state, TrafficState) else state.s


@dataclass(frozen=True)
class PotentialField:
    """Potential evaluator над a Riemann fan with its initial data."""

    model: FluxModel
    fan: WaveFan
    panels: int = 4096

    def state(self, t, x):
        if t <= 0.0:
            return self.fan.left_state if x < 0.0 else self.fan.right_state
        return self.fan.state_at(x / t)

    def __call__(self, t, x, path="x_first"):
        return potential(self.fan, self.model, t, x, path=path, panels=self.panels)

    def path_residual(self, t, x):
        a = self(t, x, path="x_first")
        b = self(t, x, path="t_first")
        return abs(a - b)


def potential(fan: WaveFan, model: FluxModel, t, x, path="x_first", panels=4096):
    """Line integral of phi from (0,0) to (t, x) along a rectilinear path.

    path "x_first" runs along t=0 then up at fixed x; "t_first" runs up the
    t-axis then across at fixed t.  Panels are split at the wave rays so the
    integrand stays smooth per panel.  Raises DegenerateCoordinateError when
    the advected coordinate vanishes on the path.
    """
    if path not in ("x_first", "t_first"):
        raise ValueError("path must be 'x_first' or 't_first'")
    speeds = fan.speeds()

    def state_at(tt, xx):
        if tt <= 0.0:
            return fan.left_state if xx < 0.0 else fan.right_state
        return fan.state_at(xx / tt)

    def horizontal(tt, x_to):
        # integrate phi_x dx from 0 to x_to at fixed time tt
        if x_to == 0.0:
            return 0.0
        brk = {0.0, x_to}
        if tt > 0.0:
            for sp in speeds:
                xi = sp * tt
                if min(0.0, x_to) < xi < max(0.0, x_to):
                    brk.add(xi)
        else:
            if min(0.0, x_to) < 0.0 < max(0.0, x_to):
                brk.add(0.0)
        total = 0.0
        pts = sorted(brk) if x_to > 0 else sorted(brk, reverse=True)
        for a, b in zip(pts[:-1], pts[1:]):
            total += _panel_integral(model, state_at, tt, a, b, panels, horizontal=True)
        return total

    def vertical(xx, t_to):
        # integrate phi_t dt from 0 to t_to at fixed x
        if t_to == 0.0:
            return 0.0
        brk = {0.0, t_to}
        for sp in speeds:
            if sp != 0.0 and xx != 0.0:
                tc = xx / sp
                if 0.0 < tc < t_to:
                    brk.add(tc)
        total = 0.0
        pts = sorted(brk)
        for a, b in zip(pts[:-1], pts[1:]):
            total += _panel_integral(model, state_at, xx, a, b, panels, horizontal=False)
        return total

    if path == "x_first":
        return horizontal(0.0, x) + vertical(x, t)
    return vertical(0.0, t) + horizontal(t, x)


def _panel_integral(model, state_at, fixed, a, b, panels, horizontal):
    n = max(8, int(panels * min(1.0, abs(b - a))))
    xs = a + (np.arange(n) + 0.5) * (b - a) / n
    total = 0.0
    for p in xs:
        st = state_at(fixed, p) if horizontal else state_at(p, fixed)
        if abs(_advected_coordinate(st)) < 1e-12 and not horizontal:
            raise DegenerateCoordinateError(
                "advected coordinate vanishes on the path (vacuum state)"
            )
        pt, px = _phi_components(model, st)
        total += (px if horizontal else pt)
    return total * (b - a) / n


# ---------------------------------------------------------------------------
# initial curve in the (psi, phi) plane
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveSegment:
    x0: float
    x1: float
    phi0: float
    phi1: float
    state: object
    vacuum: bool
    c0: float
    c1: float


@dataclass(frozen=True)
class LagrangianProfile:
    """The t=0 line mapped into the (psi, phi) plane: a continuous,
    nonincreasing piecewise-linear curve.  Vacuum stretches are horizontal
    and carry a linear concentration interpolation; a c-jump is recorded
    when the neighbours disagree."""

    segments: tuple
    c_jumps: tuple

    def phi_of_x(self, x):
        for seg in self.segments:
            if seg.x0 <= x <= seg.x1:
                if seg.x1 == seg.x0:
                    return seg.phi0
                lam = (x - seg.x0) / (seg.x1 - seg.x0)
                return seg.phi0 + lam * (seg.phi1 - seg.phi0)
        raise ValueError(f"{x} outside the profile span")

    def is_nonincreasing(self):
        return all(seg.phi1 <= seg.phi0 + 1e-14 for seg in self.segments)


def initial_curve(data: PiecewiseData, span=1.0) -> LagrangianProfile:
    """Map piecewise-constant initial data onto the (psi, phi) plane.

    Each constant stretch becomes a straight segment of slope -s (or -rho);
    vacuum stretches are horizontal with c interpolated linearly between
    the neighbouring values.
    """
    xs = [data.breaks[0] - span] + list(data.breaks) + [data.breaks[-1] + span]
    segments = []
    c_jumps = []
    # phi(0) = 0 at x = 0; integrate -s both ways
    phis = [0.0]
    x_nodes = sorted(set(xs + [0.0]))
    i0 = x_nodes.index(0.0)
    phi = 0.0
    node_phi = {0.0: 0.0}
    for a, b in zip(x_nodes[i0:], x_nodes[i0 + 1 :]):
        st = data.state_at(0.5 * (a + b))
        phi -= _advected_coordinate(st) * (b - a)
        node_phi[b] = phi
    phi = 0.0
    for b, a in zip(x_nodes[i0::-1], x_nodes[i0 - 1 :: -1] if i0 > 0 else []):
        st = data.state_at(0.5 * (a + b))
        phi += _advected_coordinate(st) * (b - a)
        node_phi[a] = phi
    recorded = set()
    for a, b in zip(x_nodes[:-1], x_nodes[1:]):
        st = data.state_at(0.5 * (a + b))
        adv = _advected_coordinate(st)
        vac = abs(adv) < 1e-14
        c_here = st.c if isinstance(st, PolymerState) else st.v
        if vac and isinstance(st, PolymerState):
            A, B, cl, cr = _vacuum_stretch(data, 0.5 * (a + b), xs[0], xs[-1])
            c0 = cl + (a - A) / (B - A) * (cr - cl)
            c1 = cl + (b - A) / (B - A) * (cr - cl)
            if abs(cr - cl) > 1e-14 and (A, B) not in recorded:
                recorded.add((A, B))
                c_jumps.append((A, B, cl, cr))
        else:
            c0 = c1 = c_here
        segments.append(
            CurveSegment(a, b, node_phi[a], node_phi[b], st, vac, c0, c1)
        )
    return LagrangianProfile(segments=tuple(segments), c_jumps=tuple(c_jumps))


def _vacuum_stretch(data, x_mid, x_lo, x_hi):
    """Extent and neighbour concentrations of the vacuum stretch around x."""
    states = data.states
    idx = int(np.searchsorted(data.breaks, x_mid, side="right"))
    A = data.breaks[idx - 1] if idx > 0 else x_lo
    B = data.breaks[idx] if idx < len(data.breaks) else x_hi
    c_left = states[idx - 1].c if idx > 0 else states[idx].c
    c_right = states[idx + 1].c if idx < len(states) - 1 else states[idx].c
    return A, B, c_left, c_right


# ---------------------------------------------------------------------------
# decoupling verification
# ---------------------------------------------------------------------------


def verify_decoupling(
    fan: WaveFan,
    model: FluxModel,
    nt=64,
    nx=64,
    t_range=(0.4, 1.2),
    x_margin=0.3,
    levels=24,
    phi_tol=1e-6,
):
    """Check the Lagrangian decoupling on a Riemann solution.

    The decoupled quantity (c for plain polymer, w for traffic) must be
    constant along fixed-phi lines away from its own wave's phi level; k
    must be constant along fixed-psi lines away from psi = 0.  Returns a
    report with the measured deviations.
    """
    if model.variant not in ("polymer", "traffic"):
        raise ValueError(
            "decoupling verification covers the plain polymer and traffic models"
        )
    speeds = fan.speeds() or [0.0]
    x_lo = min(speeds) * t_range[1] - x_margin
    x_hi = max(speeds) * t_range[1] + x_margin
    xs = np.linspace(x_lo, x_hi, nx)
    ts = np.linspace(t_range[0], t_range[1], nt)

    # cumulative phi per column: phi(t, x) = phi(0, x) + int_0^t phi_t dt
    def phi0(x):
        st = fan.left_state if x < 0 else fan.right_state
        return -_advected_coordinate(st) * x

    phi = np.empty((nt, nx))
    quant = np.empty((nt, nx))
    kval = np.empty((nt, nx))
    for j, x in enumerate(xs):
        brk = sorted({0.0, *(x / sp for sp in speeds if sp != 0.0 and x / sp > 0)})
        acc = phi0(x)
        prev = 0.0
        for i, t in enumerate(ts):
            pts = [p for p in brk if prev < p < t] + [t]
            for a, b in zip([prev] + pts[:-1], pts):
                acc += _segment_phi_t(model, fan, x, a, b)
            prev = t
            phi[i, j] = acc
            st = fan.state_at(x / t)
            kval[i, j] = st.k
            quant[i, j] = (
                st.c if isinstance(st, PolymerState) else model.w_of(st.rho, st.v, st.k)
            )

    # the decoupled quantity jumps only at its own wave's phi levels (for
    # traffic both the density contact and a vacuum fan, which collapses to
    # a single phi level, carry a w jump)
    fams = ("c",) if model.variant == "polymer" else ("rho", "vacuum")
    wave_levels = []
    for w in fan.waves:
        if w.family in fams and _wave_strength(model, w) > 1e-12:
            t_mid = 0.5 * (t_range[0] + t_range[1])
            wave_levels.append(
                potential(fan, model, t_mid, w.speed * t_mid, path="t_first", panels=2048)
            )
    cell = (
        np.max(np.abs(np.diff(phi, axis=0))) + np.max(np.abs(np.diff(phi, axis=1)))
    )
    band = 2.0 * cell

    lo, hi = np.min(phi), np.max(phi)
    max_dq = 0.0
    checked = 0
    for level in np.linspace(lo + band, hi - band, levels):
        if any(abs(level - wl) <= band for wl in wave_levels):
            continue
        vals = []
        for j in range(nx):
            col = phi[:, j]
            # phi is monotone in t per column (phi_t = f >= 0 / rho v >= 0)
            if not (col.min() - phi_tol <= level <= col.max() + phi_tol):
                continue
            i = int(np.clip(np.searchsorted(col, level), 1, nt - 1))
            # linear interpolation of the quantity in phi
            c0, c1 = col[i - 1], col[i]
            if abs(c1 - c0) < 1e-30:
                vals.append(quant[i, j])
            else:
                lam = (level - c0) / (c1 - c0)
                vals.append((1 - lam) * quant[i - 1, j] + lam * quant[i, j])
        if len(vals) >= 2:
            max_dq = max(max_dq, float(np.max(vals) - np.min(vals)))
            checked += 1

    # k along fixed-psi lines away from psi = 0
    max_dk = 0.0
    for j, x in enumerate(xs):
        if abs(x) < 1e-9:
            continue
        max_dk = max(max_dk, float(np.max(kval[:, j]) - np.min(kval[:, j])))

    name = "dc" if model.variant == "polymer" else "dw"
    return {
        f"max_{name}_along_psi_lines": float(max_dq),
        "max_dk_along_phi_lines": float(max_dk),
        "levels_checked": int(checked),
        "wave_phi_levels": [float(v) for v in wave_levels],
        "exclusion_band": float(band),
    }


def _wave_strength(model, w):
    L, R = w.left, w.right
    if isinstance(L, PolymerState):
        return abs(L.c - R.c)
    return abs(model.w_of(L.rho, L.v, L.k) - model.w_of(R.rho, R.v, R.k))


def _segment_phi_t(model, fan, x, a, b, subpanels=16):
    if b <= a:
        return 0.0
    ts = a + (np.arange(subpanels) + 0.5) * (b - a) / subpanels
    tot = 0.0
    for t in ts:
        st = fan.state_at(x / t) if t > 0 else (fan.left_state if x < 0 else fan.right_state)
        tot += _phi_components(model, st)[0]
    return tot * (b - a) / subpanels


def jacobian_report(fan: WaveFan, model: FluxModel, n=400, t=1.0, x_span=None):
    """Sampled determinants of the plain and sign-modified transforms.

    The plain transform has det = f (sign changes where f does); the
    modified transform has det = |f| >= 0.
    """
    speeds = fan.speeds() or [0.0]
    if x_span is None:
        x_span = max(1.0, 1.3 * max(abs(s) for s in speeds))
    xs = np.linspace(-x_span, x_span, n)
    dets = []
    for x in xs:
        st = fan.state_at(x / t)
        f = model.f(st.s, st.c, st.k) if isinstance(st, PolymerState) else st.rho * st.v
        dets.append(f)
    dets = np.array(dets)
    return {
        "plain_min_det": float(np.min(dets)),
        "plain_max_det": float(np.max(dets)),
        "plain_sign_changes": int(np.count_nonzero(np.diff(np.sign(dets[np.abs(dets) > 1e-13])))),
        "modified_min_det": float(np.min(np.abs(dets))),
    }

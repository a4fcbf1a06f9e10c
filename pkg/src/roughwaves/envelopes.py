"""Monotone envelopes, minimum-jump crossings, and scalar Riemann fans.

This is the computational kernel shared by every solver in the package:

* ``ScalarFn``     -- a smooth real function on an interval with derivative
  and precomputed interior critical points,
* ``build_envelope`` -- the nondecreasing ("sharp") or nonincreasing
  ("flat") running max/min envelope anchored at a state,
* ``minimum_jump`` -- the crossing of a sharp and a flat envelope, giving
  the admissible traces of a coefficient discontinuity,
* ``scalar_riemann`` -- the entropy solution of a scalar conservation law
  via lower-convex / upper-concave hull construction.

Root finding is bisection/Brent to ~1e-13 in the state variable so that all
downstream jump-condition residuals stay below 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

XTOL = 1e-14
VALUE_TOL = 1e-10


class InfeasibleJumpError(RuntimeError):
    """Raised when sharp/flat envelope ranges fail to overlap."""


def _brent(fun, lo, hi):
    return brentq(fun, lo, hi, xtol=XTOL, rtol=8.9e-16, maxiter=200)


class ScalarFn:
    """A real function on [a, b] with derivative and interior critical points.

    ``fn`` and ``dfn`` must accept numpy arrays.  Critical points are the
    roots of the derivative located by a sign-change scan (``scan_points``
    panels) followed by bisection; between consecutive critical points the
    function is strictly monotone.
    """

    def __init__(self, fn, dfn, interval, scan_points=512):
        self.fn = fn
        self.dfn = dfn
        self.a, self.b = float(interval[0]), float(interval[1])
        if not self.b > self.a:
            raise ValueError("empty interval")
        self.scan_points = scan_points
        self.critical = self._find_critical()

    def __call__(self, s):
        return self.fn(s)

    def deriv(self, s):
        return self.dfn(s)

    def _find_critical(self):
        xs = np.linspace(self.a, self.b, self.scan_points + 1)
        ds = np.asarray(self.dfn(xs), dtype=float)
        roots = []
        sign = np.sign(ds)
        for i in range(len(xs) - 1):
            s0, s1 = sign[i], sign[i + 1]
            if s0 == 0.0 and self.a < xs[i]:
                roots.append(xs[i])
            elif s0 * s1 < 0.0:
                roots.append(_brent(self.dfn, xs[i], xs[i + 1]))
        if sign[-1] == 0.0 and xs[-1] < self.b:
            roots.append(xs[-1])
        # keep interior roots only, deduplicate
        out = []
        for r in sorted(roots):
            if self.a + 1e-13 < r < self.b - 1e-13 and (not out or r - out[-1] > 1e-12):
                out.append(r)
        return out

    def breakpoints(self, extra=()):
        pts = sorted({self.a, self.b, *self.critical, *extra})
        return [p for p in pts if self.a <= p <= self.b]


def critical_points(g: ScalarFn, interval=None):
    """Sorted roots of g' on the (sub)interval; empty list if monotone."""
    if interval is None:
        return list(g.critical)
    lo, hi = interval
    return [r for r in g.critical if lo < r < hi]


@dataclass
class _Segment:
    lo: float
    hi: float
    kind: str  # "g" (follows the function) or "const"
    value: float = 0.0  # for const segments


@dataclass
class MonotoneEnvelope:
    """Piecewise representation of a running max/min envelope.

    direction "sharp": nondecreasing in s (running max to the right of the
    anchor, running min to the left).  direction "flat": nonincreasing
    (running min to the right, running max to the left).  The value at the
    anchor equals g(anchor) exactly.
    """

    g: ScalarFn
    anchor: float
    direction: str
    segments: list = field(default_factory=list)

    def __call__(self, s):
        s = float(s)
        seg = self._segment_at(s)
        return seg.value if seg.kind == "const" else float(self.g(s))

    def _segment_at(self, s):
        if s < self.g.a - 1e-12 or s > self.g.b + 1e-12:
            raise ValueError(f"{s} outside envelope domain")
        for seg in self.segments:
            if s <= seg.hi + 1e-15:
                return seg
        return self.segments[-1]

    def touch_candidates(self, y, vtol=1e-9):
        """Points s with E(s) = y and g(s) = y (traces of the level y)."""
        cands = []
        increasing = self.direction == "sharp"
        for seg in self.segments:
            if seg.kind == "const":
                if abs(seg.value - y) <= vtol:
                    for p in (seg.lo, seg.hi):
                        if abs(float(self.g(p)) - y) <= 1e-7:
                            cands.append(p)
            else:
                glo, ghi = float(self.g(seg.lo)), float(self.g(seg.hi))
                lo_v, hi_v = (glo, ghi) if increasing else (ghi, glo)
                if lo_v - vtol <= y <= hi_v + vtol:
                    if abs(glo - y) <= vtol:
                        cands.append(seg.lo)
                    elif abs(ghi - y) <= vtol:
                        cands.append(seg.hi)
                    elif min(glo, ghi) < y < max(glo, ghi):
                        cands.append(_brent(lambda s: float(self.g(s)) - y, seg.lo, seg.hi))
        uniq = []
        for p in sorted(cands):
            if not uniq or p - uniq[-1] > 1e-12:
                uniq.append(p)
        return uniq

    def contact_intervals(self):
        """Closed intervals (possibly degenerate) where the envelope touches g."""
        out = [(self.anchor, self.anchor)]
        for seg in self.segments:
            if seg.kind == "g":
                out.append((seg.lo, seg.hi))
        out.sort()
        merged = [out[0]]
        for lo, hi in out[1:]:
            if lo <= merged[-1][1] + 1e-12:
                merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
            else:
                merged.append((lo, hi))
        return merged

    def check_monotone(self, n=1000):
        xs = np.linspace(self.g.a, self.g.b, n)
        vals = np.array([self(x) for x in xs])
        d = np.diff(vals)
        return np.all(d >= -1e-10) if self.direction == "sharp" else np.all(d <= 1e-10)


def build_envelope(g: ScalarFn, anchor: float, direction: str) -> MonotoneEnvelope:
    """Running max/min envelope of g anchored at ``anchor``.

    sharp: E(s) = max g on [anchor, s] for s >= anchor, min g on [s, anchor]
    for s <= anchor (nondecreasing).  flat mirrors it (nonincreasing).
    """
    if direction not in ("sharp", "flat"):
        raise ValueError("direction must be 'sharp' or 'flat'")
    if not g.a - 1e-12 <= anchor <= g.b + 1e-12:
        raise ValueError(f"anchor {anchor} outside [{g.a}, {g.b}]")
    anchor = min(max(anchor, g.a), g.b)

    right = _sweep(g, anchor, g.b, seek_max=(direction == "sharp"))
    left = _sweep(g, anchor, g.a, seek_max=(direction != "sharp"))
    segments = [_Segment(min(lo, hi), max(lo, hi), kind, val) for lo, hi, kind, val in left]
    segments.reverse()
    segments += [_Segment(lo, hi, kind, val) for lo, hi, kind, val in right]
    segments = [s for s in segments if s.hi - s.lo > 1e-15]
    env = MonotoneEnvelope(g=g, anchor=anchor, direction=direction, segments=segments)
    if not segments:  # anchor at a domain corner with empty sweeps
        env.segments = [_Segment(g.a, g.b, "const", float(g(anchor)))]
    return env


def _sweep(g: ScalarFn, start, stop, seek_max):
    """March monotone pieces from start toward stop tracking a running extreme.

    Returns (lo, hi, kind, value) with lo = piece edge closer to ``start``.
    """
    if abs(stop - start) < 1e-15:
        return []
    fwd = stop > start
    pts = g.breakpoints(extra=[start])
    pieces = []
    if fwd:
        pts = [p for p in pts if p >= start - 1e-15]
        pieces = list(zip(pts[:-1], pts[1:]))
    else:
        pts = [p for p in pts if p <= start + 1e-15]
        pieces = list(zip(pts[1:][::-1], pts[:-1][::-1]))  # from start downward
    out = []
    extreme = float(g(start))
    better = (lambda v, m: v > m) if seek_max else (lambda v, m: v < m)
    for p, q in pieces:  # p is nearer start
        gq = float(g(q))
        if better(gq, extreme + 0.0):
            gp = float(g(p))
            if better(extreme, gp):
                # crosses the running extreme inside the piece
                x = _brent(lambda s: float(g(s)) - extreme, min(p, q), max(p, q))
                out.append((p, x, "const", extreme))
                out.append((x, q, "g", 0.0))
            else:
                out.append((p, q, "g", 0.0))
            extreme = gq
        else:
            out.append((p, q, "const", extreme))
    # merge adjacent const segments with equal value
    merged = []
    for seg in out:
        if merged and seg[2] == "const" and merged[-1][2] == "const" and merged[-1][3] == seg[3]:
            merged[-1] = (merged[-1][0], seg[1], "const", seg[3])
        else:
            merged.append(list(seg))
    return [tuple(s) for s in merged]


@dataclass(frozen=True)
class JumpPath:
    """Traces and speed/level of an admissible coefficient jump."""

    s_minus: float
    s_plus: float
    sigma: float


def minimum_jump(g_l: ScalarFn, g_r: ScalarFn, s_l: float, s_r: float) -> JumpPath:
    """Crossing of the flat envelope of g_l (anchor s_l) and the sharp
    envelope of g_r (anchor s_r).

    Returns the unique level sigma with g_l(s_minus) = sigma = g_r(s_plus)
    where both envelopes attain sigma.  On flat (constant) envelope runs the
    trace closest to its anchor is selected.
    """
    flat = build_envelope(g_l, s_l, "flat")
    sharp = build_envelope(g_r, s_r, "sharp")
    # the two functions may live on different admissible ranges (traffic
    # stagnation bounds); continue each envelope constantly past its end
    lo = max(g_l.a, g_r.a)
    hi = max(g_l.b, g_r.b)

    def diff(s):
        return sharp(min(s, g_r.b)) - flat(min(s, g_l.b))

    d_lo, d_hi = diff(lo), diff(hi)
    if d_lo > VALUE_TOL and d_hi > VALUE_TOL:
        raise InfeasibleJumpError("sharp envelope everywhere above flat envelope")
    if d_hi < -VALUE_TOL and d_lo < -VALUE_TOL:
        raise InfeasibleJumpError("sharp envelope everywhere below flat envelope")
    if d_lo >= 0.0:
        s_star = lo
    elif d_hi <= 0.0:
        s_star = hi
    else:
        s_star = _brent(diff, lo, hi)
    sigma = 0.5 * (sharp(min(s_star, g_r.b)) + flat(min(s_star, g_l.b)))

    s_minus = _nearest(flat.touch_candidates(sigma), s_l, "flat", sigma)
    s_plus = _nearest(sharp.touch_candidates(sigma), s_r, "sharp", sigma)
    resid = max(abs(float(g_l(s_minus)) - sigma), abs(float(g_r(s_plus)) - sigma))
    if resid > 1e-9:
        raise InfeasibleJumpError(f"jump residual {resid:.2e} exceeds 1e-9")
    return JumpPath(s_minus=s_minus, s_plus=s_plus, sigma=sigma)


def _nearest(cands, anchor, label, sigma):
    if not cands:
        raise InfeasibleJumpError(f"no {label}-envelope trace at level {sigma}")
    return min(cands, key=lambda s: abs(s - anchor))


# ---------------------------------------------------------------------------
# scalar Riemann solver via hull construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarWave:
    """One wave of a scalar fan: shock (chord) or rarefaction (graph run)."""

    kind: str  # "shock" | "rarefaction"
    u_left: float
    u_right: float
    speed_left: float
    speed_right: float
    profile: object = None  # xi -> u inside a rarefaction

    @property
    def speed(self):
        return 0.5 * (self.speed_left + self.speed_right)


def scalar_riemann(f: ScalarFn, u_l: float, u_r: float, grid=1024):
    """Entropy solution of u_t + f(u)_x = 0 with Riemann data (u_l, u_r).

    For u_l < u_r the fan traces the lower convex hull of f on [u_l, u_r];
    for u_l > u_r the upper concave hull on [u_r, u_l].  Chord pieces become
    shocks with the chord slope, graph pieces become rarefactions.  Junction
    points are refined by tangency root-finds so shock speeds and adjacent
    characteristic speeds agree to ~1e-12.
    """
    if u_l == u_r:
        return []
    a, b = (u_l, u_r) if u_l < u_r else (u_r, u_l)
    lower = u_l < u_r
    xs = np.array(sorted(set(np.linspace(a, b, grid + 1)) | {p for p in f.critical if a < p < b}))
    ys = np.asarray(f(xs), dtype=float)
    hull = _hull_indices(xs, ys, lower)
    nodes = _refine_hull(f, xs, hull, a, b, lower)
    return _assemble_waves(f, nodes, u_l, u_r)


def _hull_indices(xs, ys, lower):
    idx = []
    for i in range(len(xs)):
        while len(idx) >= 2:
            i0, i1 = idx[-2], idx[-1]
            s01 = (ys[i1] - ys[i0]) / (xs[i1] - xs[i0])
            s12 = (ys[i] - ys[i1]) / (xs[i] - xs[i1])
            if (s01 >= s12 - 1e-15) if lower else (s01 <= s12 + 1e-15):
                idx.pop()
            else:
                break
        idx.append(i)
    return idx


def _refine_hull(f, xs, hull, a, b, lower):
    """Turn grid hull indices into exact node coordinates.

    A node list [u_0=a, ..., u_m=b] alternates graph runs (consecutive grid
    indices) and chords (index gaps).  Chord ends interior to (a, b) are
    tangency points, solved from f'(u) = chord slope.
    """
    nodes = [(a, False)]  # (coordinate, begins_chord)
    runs = []
    i = 0
    segs = []  # list of ("run", i0, i1) / ("chord", i0, i1)
    while i < len(hull) - 1:
        if hull[i + 1] == hull[i] + 1:
            j = i
            while j < len(hull) - 1 and hull[j + 1] == hull[j] + 1:
                j += 1
            segs.append(("run", hull[i], hull[j]))
            i = j
        else:
            segs.append(("chord", hull[i], hull[i + 1]))
            i += 1

    def tangency(u0, bracket):
        # root of f'(u)(u - u0) - (f(u) - f(u0)): chord from u0 tangent at u
        def resid(u):
            return float(f.deriv(u)) * (u - u0) - (float(f(u)) - float(f(u0)))

        lo, hi = bracket
        flo, fhi = resid(lo), resid(hi)
        if flo * fhi > 0:
            # widen within the domain until a sign change appears
            for _ in range(40):
                width = hi - lo
                lo = max(a, lo - width)
                hi = min(b, hi + width)
                flo, fhi = resid(lo), resid(hi)
                if flo * fhi <= 0:
                    break
            else:
                raise RuntimeError("tangency bracket not found")
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        return _brent(resid, lo, hi)

    chords = []
    for kind, i0, i1 in segs:
        if kind != "chord":
            continue
        u0, u1 = xs[i0], xs[i1]
        left_interior = i0 != 0
        right_interior = i1 != len(xs) - 1
        lo_br = (xs[max(i0 - 1, 0)], xs[min(i0 + 1, len(xs) - 1)])
        hi_br = (xs[max(i1 - 1, 0)], xs[min(i1 + 1, len(xs) - 1)])
        if left_interior and right_interior:
            for _ in range(60):
                u0n = tangency(u1, lo_br)
                u1n = tangency(u0n, hi_br)
                moved = abs(u0n - u0) + abs(u1n - u1)
                u0, u1 = u0n, u1n
                if moved < 1e-14:
                    break
        elif right_interior:
            u1 = tangency(u0, hi_br)
        elif left_interior:
            u0 = tangency(u1, lo_br)
        chords.append((u0, u1))

    # rebuild node list: graph runs fill the gaps between refined chords
    nodes = []
    cur = a
    for u0, u1 in chords:
        if u0 - cur > 1e-13:
            nodes.append(("run", cur, u0))
        nodes.append(("chord", max(u0, cur), u1))
        cur = u1
    if b - cur > 1e-13:
        nodes.append(("run", cur, b))
    return [n for n in nodes if n[2] - n[1] > 1e-13]


def _assemble_waves(f, nodes, u_l, u_r):
    lower = u_l < u_r
    waves = []
    seq = nodes if lower else nodes[::-1]
    for kind, ua, ub in seq:
        if lower:
            a_, b_ = ua, ub
        else:
            a_, b_ = ub, ua  # traverse from u_l (large) down to u_r
        if kind == "chord":
            sl = (float(f(ub)) - float(f(ua))) / (ub - ua)
            waves.append(ScalarWave("shock", a_, b_, sl, sl))
        else:
            spl = float(f.deriv(a_))
            spr = float(f.deriv(b_))
            if abs(spr - spl) < 1e-13:
                continue
            prof = _make_profile(f, a_, b_)
            waves.append(ScalarWave("rarefaction", a_, b_, spl, spr, prof))
    for wprev, wnext in zip(waves[:-1], waves[1:]):
        if wnext.speed_left < wprev.speed_right - 1e-9:
            raise RuntimeError(
                f"hull produced decreasing speeds: {wprev} -> {wnext}"
            )
    return waves


def _make_profile(f, u_left, u_right, table=513):
    """Rarefaction profile xi -> u: interpolation bracket plus a Brent polish."""
    cache = {}

    def prof(xi):
        if "u" not in cache:
            u = np.linspace(min(u_left, u_right), max(u_left, u_right), table)
            d = np.asarray(f.deriv(u), dtype=float)
            order = np.argsort(d)
            cache["u"] = u[order]
            cache["d"] = d[order]
        d, u = cache["d"], cache["u"]
        i = int(np.clip(np.searchsorted(d, xi), 1, len(d) - 1))
        lo, hi = sorted((u[max(i - 2, 0)], u[min(i + 1, len(u) - 1)]))
        dlo, dhi = float(f.deriv(lo)), float(f.deriv(hi))
        if (xi - dlo) * (xi - dhi) > 0:
            return rarefaction_state(f, u_left, u_right, xi)
        if dlo == dhi:
            return lo
        return _brent(lambda v: float(f.deriv(v)) - xi, lo, hi)

    return prof


def rarefaction_state(f: ScalarFn, u_left, u_right, xi):
    """Invert f'(u) = xi on the rarefaction branch [u_left, u_right]."""
    lo, hi = (u_left, u_right) if u_left < u_right else (u_right, u_left)
    dlo, dhi = float(f.deriv(lo)), float(f.deriv(hi))
    if (xi - dlo) * (xi - dhi) > 0:
        return lo if abs(xi - dlo) < abs(xi - dhi) else hi
    if dlo == dhi:
        return lo
    return _brent(lambda u: float(f.deriv(u)) - xi, lo, hi)

"""States, waves, and self-similar wave fans.

A ``WaveFan`` is an ordered list of waves with nondecreasing speeds whose
states chain from the left datum to the right datum.  Fans are sampled at
similarity coordinates xi = x/t; exactly at a shock speed the left limit is
returned.  Rankine-Hugoniot and cross-wave continuity residuals are computed
in the conserved variables of the governing system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_TOL = 1e-9


@dataclass(frozen=True)
class PolymerState:
    s: float
    c: float
    k: float

    def as_tuple(self):
        return (self.s, self.c, self.k)


@dataclass(frozen=True)
class TrafficState:
    rho: float
    v: float
    k: float

    def as_tuple(self):
        return (self.rho, self.v, self.k)


def state_fields(state):
    return ("s", "c", "k") if isinstance(state, PolymerState) else ("rho", "v", "k")


@dataclass(frozen=True)
class Wave:
    """One wave: family in {s, c, k, ck, rho, v, vacuum}, kind in
    {shock, rarefaction, contact}.  Rarefactions carry a profile xi -> state
    on [speed_left, speed_right]; other kinds have speed_left == speed_right.
    """

    family: str
    kind: str
    left: object
    right: object
    speed_left: float
    speed_right: float
    profile: object = None

    @property
    def speed(self):
        return 0.5 * (self.speed_left + self.speed_right)

    def state_at(self, xi):
        if self.kind == "rarefaction" and self.profile is not None:
            return self.profile(min(max(xi, self.speed_left), self.speed_right))
        return self.left if xi <= self.speed else self.right


class FanError(RuntimeError):
    """A constructed fan violated speed ordering or state chaining."""


@dataclass(frozen=True)
class WaveFan:
    model: object
    left_state: object
    right_state: object
    waves: tuple
    labels: dict

    def validate(self):
        prev = self.left_state
        prev_speed = -np.inf
        for w in self.waves:
            if _state_gap(prev, w.left) > 1e-8:
                raise FanError(f"state chain broken before {w}")
            if w.speed_left < prev_speed - SPEED_TOL:
                raise FanError(
                    f"speeds decrease: {prev_speed} -> {w.speed_left} at {w.family}-{w.kind}"
                )
            if w.speed_right < w.speed_left - SPEED_TOL:
                raise FanError(f"inverted speed range on {w}")
            prev = w.right
            prev_speed = w.speed_right
        if _state_gap(prev, self.right_state) > 1e-8:
            raise FanError("state chain does not reach the right datum")
        return self

    def state_at(self, xi):
        """Self-similar state at xi = x/t (left limit at shock speeds)."""
        cur = self.left_state
        for w in self.waves:
            if xi < w.speed_left:
                return cur
            if xi <= w.speed_right:
                return w.state_at(xi)
            cur = w.right
        return self.right_state

    def sample(self, t, xs):
        """States at positions xs at time t > 0."""
        return [self.state_at(x / t) for x in np.asarray(xs, dtype=float)]

    def speeds(self):
        out = []
        for w in self.waves:
            out.extend((w.speed_left, w.speed_right))
        return out


def _state_gap(a, b):
    return max(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple()))


# ---------------------------------------------------------------------------
# conserved variables and residual diagnostics
# ---------------------------------------------------------------------------


def conserved(model, state):
    """Conserved vector of the governing 3x3 system at a state."""
    if isinstance(state, PolymerState):
        ads = model.m(state.c)[0] if model.variant == "polymer_adsorption" else 0.0
        return np.array([state.s, ads + state.c * state.s, state.k])
    w = model.w_of(state.rho, state.v, state.k)
    return np.array([state.rho, state.rho * w, state.k])


def flux_vector(model, state):
    if isinstance(state, PolymerState):
        f = model.f(state.s, state.c, state.k)
        return np.array([f, state.c * f, 0.0])
    w = model.w_of(state.rho, state.v, state.k)
    q = state.rho * state.v
    return np.array([q, q * w, 0.0])


def rankine_hugoniot_residual(model, wave):
    """max_i |sigma [U_i] - [F_i]| for a shock/contact wave (0 for fans).

    The third component (k with zero flux) enforces that only stationary
    waves may carry a k jump.
    """
    if wave.kind == "rarefaction":
        return 0.0
    du = conserved(model, wave.right) - conserved(model, wave.left)
    df = flux_vector(model, wave.right) - flux_vector(model, wave.left)
    return float(np.max(np.abs(wave.speed * du - df)))


def continuity_residuals(model, wave):
    """Quantities that stay continuous across this wave family -> residuals."""
    L, R = wave.left, wave.right
    out = {}
    if isinstance(L, PolymerState):
        fl = model.f(L.s, L.c, L.k)
        fr = model.f(R.s, R.c, R.k)
        if wave.family == "k":
            out["f"] = abs(fl - fr)
            out["c"] = abs(L.c - R.c)
        elif wave.family == "c":
            out["k"] = abs(L.k - R.k)
            if model.variant == "polymer_adsorption":
                pass  # RH residual covers the f/(s+a) matching
            else:
                gl = fl / L.s if L.s > 0 else 0.0
                gr = fr / R.s if R.s > 0 else 0.0
                out["f_over_s"] = abs(gl - gr)
        elif wave.family == "s":
            out["c"] = abs(L.c - R.c)
            out["k"] = abs(L.k - R.k)
        elif wave.family == "ck":
            out["f"] = abs(fl - fr)
    else:
        wl = model.w_of(L.rho, L.v, L.k)
        wr = model.w_of(R.rho, R.v, R.k)
        if wave.family == "k":
            out["rho_v"] = abs(L.rho * L.v - R.rho * R.v)
            out["w"] = abs(wl - wr)
        elif wave.family == "v":
            out["w"] = abs(wl - wr)
            out["k"] = abs(L.k - R.k)
        elif wave.family == "rho":
            out["v"] = abs(L.v - R.v)
            out["k"] = abs(L.k - R.k)
        elif wave.family == "vacuum":
            out["rho"] = abs(L.rho) + abs(R.rho)
            out["k"] = abs(L.k - R.k)
    return out


def fan_diagnostics(model, fan):
    """Aggregate residuals: max RH and max continuity violation over the fan."""
    rh = 0.0
    cont = 0.0
    for w in fan.waves:
        rh = max(rh, rankine_hugoniot_residual(model, w))
        res = continuity_residuals(model, w)
        if res:
            cont = max(cont, max(res.values()))
    return {"max_rankine_hugoniot": rh, "max_continuity": cont}

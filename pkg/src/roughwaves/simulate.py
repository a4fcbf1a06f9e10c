"""Cauchy-problem machinery: viscous reference solver, fan sampling, and
wave-front tracking for the traffic model.

The viscous solver integrates the conserved form with a central flux
difference plus artificial viscosity eps on the evolving variables; the
coefficient k(x) stays frozen and sharp.  It is the admissibility oracle
the exact solvers are validated against.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .fluxes import FluxModel
from .waves import TrafficState, WaveFan


def sample_fan(fan: WaveFan, t: float, xs):
    """States of a self-similar fan at time t > 0 and positions xs.

    Inside rarefactions the profile is evaluated at xi = x/t; exactly at a
    shock speed the left limit is returned.
    """
    if t <= 0:
        raise ValueError("sampling time must be positive")
    return fan.sample(t, xs)


@dataclass(frozen=True)
class ScalarConservationModel:
    """Single scalar law u_t + f(u)_x = 0 for oracle testing; states are floats."""

    fn: object
    dfn: object
    variant: str = "scalar"

    def f_range(self, lo, hi):
        u = np.linspace(lo, hi, 513)
        return float(np.max(np.abs(self.dfn(u))))


@dataclass(frozen=True)
class PiecewiseData:
    """Piecewise-constant initial data: states[i] on (breaks[i-1], breaks[i])."""

    breaks: tuple
    states: tuple

    def __post_init__(self):
        if len(self.states) != len(self.breaks) + 1:
            raise ValueError("need exactly one more state than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must increase")

    def state_at(self, x):
        i = int(np.searchsorted(self.breaks, x, side="right"))
        return self.states[i]

    @classmethod
    def riemann(cls, left, right, x0=0.0):
        return cls(breaks=(x0,), states=(left, right))


# ---------------------------------------------------------------------------
# viscous reference solver
# ---------------------------------------------------------------------------


@dataclass
class ViscousRun:
    model: FluxModel
    x: np.ndarray
    U: np.ndarray  # (2, cells) evolving conserved variables
    kprof: np.ndarray
    eps: float
    dx: float
    dt: float
    T: float
    steps: int
    mass_residual: float

    def primitives(self):
        return _primitive(self.model, self.U, self.kprof)

    def conserved_of_fan(self, fan, t=None):
        """Conserved profile of an exact fan on this run's grid."""
        t = self.T if t is None else t
        states = fan.sample(t, self.x)
        return _states_to_conserved(self.model, states, self.kprof)

    def l1_distance(self, fan, t=None):
        """Per-variable L1 distance between the fan and the viscous profile."""
        ref = self.conserved_of_fan(fan, t)
        diff = np.abs(ref - self.U) * self.dx
        return {"u1": float(diff[0].sum()), "u2": float(diff[1].sum())}


def _states_to_conserved(model, states, kprof):
    U = np.empty((2, len(states)))
    if model.variant == "scalar":
        U[0] = np.array([float(s) for s in states])
        U[1] = 0.0
    elif model.variant == "traffic":
        rho = np.array([s.rho for s in states])
        v = np.array([s.v for s in states])
        w = v + kprof * rho**model.gamma
        U[0] = rho
        U[1] = rho * w
    else:
        s = np.array([st.s for st in states])
        c = np.array([st.c for st in states])
        ads = model.m(c)[0] if model.variant == "polymer_adsorption" else 0.0
        U[0] = s
        U[1] = ads + c * s
    return U


def _primitive(model, U, kprof):
    if model.variant == "scalar":
        return (U[0],)
    if model.variant == "traffic":
        rho = np.maximum(U[0], 0.0)
        w = np.where(rho > 1e-12, U[1] / np.where(rho > 1e-12, rho, 1.0), 0.0)
        v = w - kprof * rho**model.gamma
        return rho, v
    s = np.clip(U[0], 0.0, 1.0)
    if model.variant == "polymer_adsorption":
        c = _invert_adsorbed(model, s, U[1])
    else:
        c = np.clip(np.where(s > 1e-12, U[1] / np.where(s > 1e-12, s, 1.0), 0.0), 0.0, 1.0)
    return s, c


def _invert_adsorbed(model, s, u2, iters=30):
    """Solve m(c) + c*s = u2 for c by vectorised Newton (monotone in c)."""
    c = np.clip(np.where(s + 0.5 > 0, u2 / (s + 0.5), 0.0), 0.0, 1.0)
    for _ in range(iters):
        m, dm, _ = model.m(c)
        resid = m + c * s - u2
        step = resid / (dm + s)
        c = np.clip(c - step, 0.0, 1.0)
        if np.max(np.abs(step)) < 1e-14:
            break
    return c


def _flux_of(model, U, kprof):
    if model.variant == "scalar":
        return np.stack([np.asarray(model.fn(U[0]), dtype=float), np.zeros_like(U[0])])
    if model.variant == "traffic":
        rho, v = _primitive(model, U, kprof)
        q = rho * v
        w = np.where(rho > 1e-12, U[1] / np.where(rho > 1e-12, rho, 1.0), v)
        return np.stack([q, q * w])
    s, c = _primitive(model, U, kprof)
    f = model.f(s, c, kprof)
    return np.stack([f, c * f])


def _speed_bound(model, data: PiecewiseData):
    lam = 0.1
    if model.variant == "scalar":
        vals = [float(s) for s in data.states]
        return max(lam, model.f_range(min(vals) - 0.1, max(vals) + 0.1))
    if model.variant == "traffic":
        ws = [model.w_of(st.rho, st.v, st.k) for st in data.states]
        vmin = min(st.v for st in data.states)
        wmax = max(ws)
        # intermediates satisfy w <= wmax and k rho^gamma <= wmax - vmin
        lam = max(lam, wmax + 0.1, model.gamma * (wmax - vmin) - vmin + 0.1)
    else:
        ss = np.linspace(0.0, 1.0, 257)
        for st in data.states:
            for st2 in data.states:
                lam = max(lam, float(np.max(np.abs(model.f_s(ss, st.c, st2.k)))))
    return lam


def viscous_solve(
    model: FluxModel,
    data: PiecewiseData,
    eps: float,
    cells: int,
    T: float,
    x_span=None,
    cfl=0.4,
) -> ViscousRun:
    """Explicit conservative scheme for U_t + F(U, k(x))_x = eps U_xx.

    Central flux average plus artificial viscosity on the two evolving
    conserved variables; k(x) is held frozen (never smeared).  Outflow
    boundaries; time step obeys dt <= cfl * min(dx/lam, dx^2/(2 eps)).
    """
    lam = _speed_bound(model, data)
    if x_span is None:
        reach = max(abs(b) for b in data.breaks)
        x_span = reach + 1.3 * lam * T + 6.0 * math.sqrt(max(eps * T, 0.0)) + 0.5
    edges = np.linspace(-x_span, x_span, cells + 1)
    x = 0.5 * (edges[:-1] + edges[1:])
    dx = edges[1] - edges[0]
    dt = cfl * min(dx / lam, dx * dx / (2.0 * eps))
    if dt <= 0 or not np.isfinite(dt):
        raise ValueError("CFL produced a nonpositive time step")
    peclet = lam * dx / eps
    if peclet > 5.0:
        raise ValueError(
            f"cell Peclet number {peclet:.1f} too large for the central scheme; "
            "increase cells or eps"
        )

    states = [data.state_at(xi) for xi in x]
    kprof = np.array([getattr(st, "k", 1.0) for st in states])
    U = _states_to_conserved(model, states, kprof)

    t = 0.0
    steps = 0
    mass_resid = 0.0
    while t < T - 1e-14:
        step = min(dt, T - t)
        nu = eps * step / (dx * dx)
        F = _flux_of(model, U, kprof)
        Fbar_r = 0.5 * (F[:, 1:] + F[:, :-1])  # interior interfaces
        div = np.zeros_like(U)
        div[:, 1:-1] = Fbar_r[:, 1:] - Fbar_r[:, :-1]
        div[:, 0] = Fbar_r[:, 0] - F[:, 0]
        div[:, -1] = F[:, -1] - Fbar_r[:, -1]
        lap = np.zeros_like(U)
        lap[:, 1:-1] = U[:, 2:] - 2.0 * U[:, 1:-1] + U[:, :-2]
        lap[:, 0] = U[:, 1] - U[:, 0]
        lap[:, -1] = U[:, -2] - U[:, -1]
        audit = steps % 512 == 0
        if audit:
            mass_before = U.sum(axis=1)
        U = U - (step / dx) * div + nu * lap
        if audit:
            # telescoping budget: the total only moves by the boundary terms
            expected = (
                mass_before
                - (step / dx) * (F[:, -1] - F[:, 0])
                + nu * lap.sum(axis=1)
            )
            mass_resid = max(
                mass_resid, float(np.max(np.abs(U.sum(axis=1) - expected)))
            )
            if not np.all(np.isfinite(U)):
                raise RuntimeError(f"viscous solve blew up at t = {t:.4f}")
        t += step
        steps += 1
    if not np.all(np.isfinite(U)):
        raise RuntimeError("viscous solve produced non-finite values")
    return ViscousRun(
        model=model,
        x=x,
        U=U,
        kprof=kprof,
        eps=eps,
        dx=dx,
        dt=dt,
        T=T,
        steps=steps,
        mass_residual=mass_resid,
    )


# ---------------------------------------------------------------------------
# wave-front tracking for the reduced traffic model
# ---------------------------------------------------------------------------


@dataclass
class Front:
    """A moving discontinuity of the tracker, endpoints in the (w, v) plane."""

    x0: float
    t0: float
    speed: float
    left: tuple  # (w, v)
    right: tuple
    family: str  # "v" | "rho" | "vacuum"
    alive: bool = True

    def position(self, t):
        return self.x0 + self.speed * (t - self.t0)

    @property
    def strength(self):
        return abs(self.left[0] - self.right[0]) + abs(self.left[1] - self.right[1])


@dataclass
class FrontState:
    """Snapshot of the tracker: position-ordered fronts at a given time."""

    time: float
    positions: list
    fronts: list
    total_strength: float
    interaction_count: int


@dataclass
class InteractionEvent:
    time: float
    x: float
    strength_in: float
    strength_out: float
    fronts_in: int
    fronts_out: int
    families_in: tuple = ()
    families_out: tuple = ()
    perturbed: bool = False


@dataclass
class FrontTrackingRun:
    model: FluxModel
    k: float
    eps_frac: float
    T: float
    fronts: list
    events: list
    initial_front_count: int
    max_front_count: int
    left_state: tuple

    def snapshot(self, t) -> FrontState:
        live = sorted(
            (f for f in self.fronts if f.alive and f.t0 <= t + 1e-15),
            key=lambda f: (f.position(t), f.speed),
        )
        total = sum(f.strength for f in live)
        return FrontState(
            time=t,
            positions=[f.position(t) for f in live],
            fronts=live,
            total_strength=total,
            interaction_count=len(self.events),
        )

    def sample(self, t, xs):
        """TrafficState profile at time t."""
        snap = self.snapshot(t)
        out = []
        for x in np.asarray(xs, dtype=float):
            state = self.left_state
            for f, pos in zip(snap.fronts, snap.positions):
                if pos <= x:
                    state = f.right
                else:
                    break
            w, v = state
            out.append(TrafficState(self.model.rho_of(w, v, self.k), v, self.k))
        return out

    def strength_history(self):
        """Total strength just after start and after each interaction."""
        totals = [sum(f.strength for f in self.fronts if f.t0 == 0.0)]
        running = totals[0]
        for ev in self.events:
            running += ev.strength_out - ev.strength_in
            totals.append(running)
        return totals


def _wv(model, state: TrafficState):
    return (model.w_of(state.rho, state.v, state.k), state.v)


def _rh_speed(model, k, a, b):
    """Exact jump speed between two (w, v) states of the same family."""
    wa, va = a
    wb, vb = b
    if abs(va - vb) < 1e-15:
        return va  # density contact
    ra = model.rho_of(wa, va, k)
    rb = model.rho_of(wb, vb, k)
    if abs(ra - rb) < 1e-15:
        return 0.5 * (va + vb)  # vacuum Burgers piece
    return (rb * vb - ra * va) / (rb - ra)


def _chopped_fronts(model, k, left: tuple, right: tuple, eps_frac, x0, t0):
    """Fronts of the local Riemann solution, rarefactions chopped in v."""
    from .reduced import solve_traffic2

    L = TrafficState(model.rho_of(*left, k), left[1], k)
    R = TrafficState(model.rho_of(*right, k), right[1], k)
    fan = solve_traffic2(L, R, model)
    fronts = []
    for wave in fan.waves:
        a = _wv(model, wave.left)
        b = _wv(model, wave.right)
        if wave.kind == "rarefaction":
            n = max(1, int(np.ceil(abs(b[1] - a[1]) / eps_frac)))
            vs = np.linspace(a[1], b[1], n + 1)
            if wave.family == "vacuum":
                states = [(v, v) for v in vs]
            else:
                states = [(a[0], v) for v in vs]
            for sa, sb in zip(states[:-1], states[1:]):
                fronts.append(
                    Front(x0, t0, _rh_speed(model, k, sa, sb), sa, sb, wave.family)
                )
        else:
            fronts.append(Front(x0, t0, wave.speed, a, b, wave.family))
    return [f for f in fronts if f.strength > 1e-14]


def front_tracking(
    model: FluxModel, data: PiecewiseData, eps_frac=0.01, T=5.0
) -> FrontTrackingRun:
    """Wave-front tracking for the reduced traffic model (fixed road k).

    Rarefactions are approximated by jumps of size at most eps_frac in v;
    collisions re-solve the local Riemann problem.  Simultaneous collisions
    are serialised by a 1e-12 time perturbation (recorded on the event).
    Total Manhattan strength in the (w, v) plane never increases.
    """
    if model.variant != "traffic":
        raise ValueError("front tracking covers the reduced traffic model")
    ks = {s.k for s in data.states}
    if len(ks) > 1:
        raise ValueError("front tracking requires a single road coefficient")
    k = ks.pop()

    fronts = []
    for x0, (sl, sr) in zip(data.breaks, zip(data.states[:-1], data.states[1:])):
        fronts.extend(
            _chopped_fronts(model, k, _wv(model, sl), _wv(model, sr), eps_frac, x0, 0.0)
        )
    fronts.sort(key=lambda f: (f.x0, f.speed))
    initial_count = len(fronts)
    max_count = initial_count
    events = []

    # adjacency as a doubly linked list over live fronts
    order = list(range(len(fronts)))
    left_of = {}
    right_of = {}
    for a, b in zip(order[:-1], order[1:]):
        right_of[a] = b
        left_of[b] = a

    heap = []
    counter = 0

    def collision_time(i, j, now):
        fi, fj = fronts[i], fronts[j]
        if fi.speed <= fj.speed + 1e-14:
            return None
        xi = fi.position(now)
        xj = fj.position(now)
        dt = (xj - xi) / (fi.speed - fj.speed)
        return now + max(dt, 0.0)

    def push(i, j, now):
        nonlocal counter
        tc = collision_time(i, j, now)
        if tc is not None and tc <= T + 1e-12:
            heapq.heappush(heap, (tc, counter, i, j))
            counter += 1

    for a, b in zip(order[:-1], order[1:]):
        push(a, b, 0.0)

    t_now = 0.0
    last_event_t = -1.0
    while heap:
        tc, _, i, j = heapq.heappop(heap)
        fi, fj = fronts[i], fronts[j]
        if not (fi.alive and fj.alive and right_of.get(i) == j):
            continue
        if tc > T:
            break
        perturbed = False
        if tc <= last_event_t + 1e-12 and tc >= last_event_t - 1e-12 and events:
            tc = last_event_t + 1e-12  # serialise simultaneous collisions
            perturbed = True
        t_now = tc
        last_event_t = tc
        x_col = fi.position(tc)
        s_in = fi.strength + fj.strength
        fi.alive = False
        fj.alive = False
        new = _chopped_fronts(model, k, fi.left, fj.right, eps_frac, x_col, tc)
        s_out = sum(f.strength for f in new)
        events.append(
            InteractionEvent(
                time=tc,
                x=x_col,
                strength_in=s_in,
                strength_out=s_out,
                fronts_in=2,
                fronts_out=len(new),
                families_in=(fi.family, fj.family),
                families_out=tuple(f.family for f in new),
                perturbed=perturbed,
            )
        )
        lid = left_of.get(i)
        rid = right_of.get(j)
        ids = []
        for f in new:
            fronts.append(f)
            ids.append(len(fronts) - 1)
        chain = ([lid] if lid is not None else []) + ids + ([rid] if rid is not None else [])
        for a, b in zip(chain[:-1], chain[1:]):
            right_of[a] = b
            left_of[b] = a
        if lid is not None and not ids:
            right_of[lid] = rid
        if rid is not None and not ids:
            left_of[rid] = lid
        if lid is not None and ids:
            push(lid, ids[0], tc)
        if rid is not None and ids:
            push(ids[-1], rid, tc)
        for a, b in zip(ids[:-1], ids[1:]):
            push(a, b, tc)
        if lid is not None and rid is not None and not ids:
            push(lid, rid, tc)
        live_now = sum(1 for f in fronts if f.alive)
        max_count = max(max_count, live_now)

    return FrontTrackingRun(
        model=model,
        k=k,
        eps_frac=eps_frac,
        T=T,
        fronts=fronts,
        events=events,
        initial_front_count=initial_count,
        max_front_count=max_count,
        left_state=_wv(model, data.states[0]),
    )

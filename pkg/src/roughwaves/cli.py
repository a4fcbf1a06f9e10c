"""Command-line interface: problem ingestion, solver dispatch, artifacts.

Verbs:

* ``solve``     -- Riemann problem -> fan JSON (+ optional profile CSV/PNG)
* ``simulate``  -- Cauchy problem via front tracking or the viscous solver
* ``compare``   -- L1 distance between two problem specs on a common grid
* ``validate``  -- run the invariant suite on a spec's solution

Exit codes: 0 success, 2 input/schema error, 3 solver assertion failure.
All artifacts are written atomically and are byte-stable for a fixed spec
and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .fluxes import DomainError, FluxModel, make_model
from .full3x3 import solve_gravity3, solve_polymer3, solve_traffic3
from .lagrangian import verify_decoupling
from .reduced import FanError
from .envelopes import InfeasibleJumpError
from .simulate import PiecewiseData, front_tracking, sample_fan, viscous_solve
from .waves import (
    PolymerState,
    TrafficState,
    WaveFan,
    conserved,
    fan_diagnostics,
    rankine_hugoniot_residual,
    continuity_residuals,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SOLVER = 3


class SpecError(ValueError):
    """Problem-file schema violation with a location hint."""


# ---------------------------------------------------------------------------
# spec parsing
# ---------------------------------------------------------------------------


def load_spec(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return parse_spec(raw)


def parse_spec(raw):
    if not isinstance(raw, dict):
        raise SpecError("spec root must be an object")
    model_name = raw.get("model")
    if model_name not in ("polymer", "polymer_adsorption", "polymer_gravity", "traffic"):
        raise SpecError(f"field 'model': unknown model {model_name!r}")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("field 'params' must be an object")
    try:
        model = make_model(model_name, **params)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"field 'params': {exc}")
    problem = raw.get("problem")
    if not isinstance(problem, dict) or problem.get("type") not in ("riemann", "cauchy"):
        raise SpecError("field 'problem.type' must be 'riemann' or 'cauchy'")
    spec = {
        "model_name": model_name,
        "model": model,
        "problem": problem,
        "output": raw.get("output", {"fan": True}),
        "seed": int(raw.get("seed", 0)),
        "tolerances": raw.get("tolerances", {}),
    }
    if problem["type"] == "riemann":
        spec["left"] = _parse_state(problem.get("left"), model, "problem.left")
        spec["right"] = _parse_state(problem.get("right"), model, "problem.right")
    else:
        breaks = problem.get("breakpoints")
        states = problem.get("states")
        if not isinstance(breaks, list) or not isinstance(states, list):
            raise SpecError("cauchy problems need 'breakpoints' and 'states' lists")
        if len(states) != len(breaks) + 1:
            raise SpecError("need exactly one more state than breakpoints")
        parsed = [_parse_state(s, model, f"problem.states[{i}]") for i, s in enumerate(states)]
        try:
            spec["data"] = PiecewiseData(breaks=tuple(map(float, breaks)), states=tuple(parsed))
        except ValueError as exc:
            raise SpecError(str(exc))
        method = problem.get("method", "viscous")
        if method not in ("front_tracking", "viscous"):
            raise SpecError("problem.method must be 'front_tracking' or 'viscous'")
        if method == "front_tracking" and model.variant != "traffic":
            raise SpecError("front tracking is only available for the traffic model")
        spec["method"] = method
        spec["T"] = float(problem.get("T", 1.0))
    return spec


def _parse_state(obj, model: FluxModel, where):
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: state must be an object")
    try:
        if model.variant == "traffic":
            st = TrafficState(float(obj["rho"]), float(obj["v"]), float(obj["k"]))
            if st.rho < 0 or st.v < 0 or st.k <= 0:
                raise SpecError(f"{where}: inadmissible traffic state {obj}")
        else:
            st = PolymerState(float(obj["s"]), float(obj["c"]), float(obj["k"]))
            if not (0 <= st.s <= 1 and 0 <= st.c <= 1):
                raise SpecError(f"{where}: saturation/concentration outside [0,1]")
            p = model.polymer
            if not (p.k_min <= st.k <= p.k_max):
                raise SpecError(f"{where}: permeability outside [{p.k_min}, {p.k_max}]")
    except KeyError as exc:
        raise SpecError(f"{where}: missing field {exc}")
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{where}: {exc}")
    return st


# ---------------------------------------------------------------------------
# solving and serialisation
# ---------------------------------------------------------------------------


def solve_riemann(spec) -> WaveFan:
    model = spec["model"]
    left, right = spec["left"], spec["right"]
    if model.variant == "traffic":
        return solve_traffic3(left, right, model)
    if model.variant == "polymer_gravity":
        return solve_gravity3(left, right, model)
    return solve_polymer3(left, right, model)


def state_to_dict(st):
    if isinstance(st, TrafficState):
        return {"rho": st.rho, "v": st.v, "k": st.k}
    return {"s": st.s, "c": st.c, "k": st.k}


def state_from_dict(obj):
    if "rho" in obj:
        return TrafficState(obj["rho"], obj["v"], obj["k"])
    return PolymerState(obj["s"], obj["c"], obj["k"])


def fan_document(spec, fan: WaveFan):
    model = spec["model"]
    waves = []
    for w in fan.waves:
        entry = {
            "family": w.family,
            "kind": w.kind,
            "left": state_to_dict(w.left),
            "right": state_to_dict(w.right),
        }
        if w.kind == "rarefaction":
            entry["speed_range"] = [w.speed_left, w.speed_right]
        else:
            entry["speed"] = w.speed
        waves.append(entry)
    diag = fan_diagnostics(model, fan)
    labels = {
        k: (v if isinstance(v, (str, int, float, bool)) else str(v))
        for k, v in fan.labels.items()
    }
    return {
        "schema": "roughwaves.fan/1",
        "model": spec["model_name"],
        "left": state_to_dict(fan.left_state),
        "right": state_to_dict(fan.right_state),
        "labels": labels,
        "waves": waves,
        "diagnostics": diag,
    }


def fan_document_roundtrip(doc):
    """parse(serialise(doc)) for the lossless round-trip guarantee."""
    return json.loads(json.dumps(doc, sort_keys=True))


def write_json(path, obj):
    payload = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    _atomic_write(path, payload.encode("utf-8"))


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _atomic_write(path, payload: bytes):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def profile_rows(model, states, t, xs):
    fields = ("rho", "v", "k") if model.variant == "traffic" else ("s", "c", "k")
    rows = []
    for x, st in zip(xs, states):
        rows.append([t, float(x)] + [getattr(st, f) for f in fields])
    return ["time", "x", *fields], rows


def profile_grid(spec, default_span=2.0):
    out = spec["output"].get("profile") or {}
    t = float(out.get("t", 1.0))
    lo = float(out.get("x_min", -default_span))
    hi = float(out.get("x_max", default_span))
    n = int(out.get("points", 801))
    if not hi > lo or n < 2:
        raise SpecError("output.profile: need x_max > x_min and points >= 2")
    return t, np.linspace(lo, hi, n)


def render_profile_figure(path, header, rows, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cols = list(zip(*rows))
    x = cols[1]
    fig, axes = plt.subplots(len(header) - 2, 1, sharex=True, figsize=(7, 7))
    for ax, name, vals in zip(np.atleast_1d(axes), header[2:], cols[2:]):
        ax.plot(x, vals, lw=1.2)
        ax.set_ylabel(name)
        ax.grid(alpha=0.3)
    np.atleast_1d(axes)[-1].set_xlabel("x")
    fig.suptitle(title)
    fig.savefig(path, dpi=110, metadata={"Software": "roughwaves"})
    plt.close(fig)


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------


def run_solve(spec, out_dir, figures=True):
    if spec["problem"]["type"] != "riemann":
        raise SpecError("'solve' expects a riemann problem (use 'simulate' for cauchy)")
    fan = solve_riemann(spec)
    doc = fan_document(spec, fan)
    write_json(os.path.join(out_dir, "fan.json"), doc)
    wrote = ["fan.json"]
    if spec["output"].get("profile"):
        t, xs = profile_grid(spec, default_span=_auto_span(fan))
        header, rows = profile_rows(spec["model"], sample_fan(fan, t, xs), t, xs)
        write_csv(os.path.join(out_dir, "profile.csv"), header, rows)
        wrote.append("profile.csv")
        if figures:
            render_profile_figure(
                os.path.join(out_dir, "profile.png"),
                header,
                rows,
                f"{spec['model_name']} fan profile at t={t}",
            )
            wrote.append("profile.png")
    if spec["output"].get("decoupling_report"):
        if spec["model"].variant not in ("polymer", "traffic"):
            raise SpecError(
                "output.decoupling_report covers the polymer and traffic models"
            )
        rep = verify_decoupling(fan, spec["model"])
        write_json(os.path.join(out_dir, "decoupling.json"), rep)
        wrote.append("decoupling.json")
    return doc, wrote


def _auto_span(fan):
    speeds = fan.speeds() or [0.0]
    return max(1.0, 1.3 * max(abs(s) for s in speeds))


def run_simulate(spec, out_dir, figures=True):
    if spec["problem"]["type"] != "cauchy":
        raise SpecError("'simulate' expects a cauchy problem")
    model = spec["model"]
    T = spec["T"]
    prob = spec["problem"]
    if spec["method"] == "front_tracking":
        run = front_tracking(
            model, spec["data"], eps_frac=float(prob.get("epsilon_frac", 0.01)), T=T
        )
        totals = run.strength_history()
        rows = []
        running = totals[0]
        rows.append([0.0, 0.0, 0.0, 0.0, run.initial_front_count, 0, running, 0])
        for ev, tot in zip(run.events, totals[1:]):
            rows.append(
                [ev.time, ev.x, ev.strength_in, ev.strength_out, ev.fronts_in, ev.fronts_out, tot, ev.perturbed]
            )
        write_csv(
            os.path.join(out_dir, "events.csv"),
            ["time", "x", "strength_in", "strength_out", "fronts_in", "fronts_out", "total_strength", "perturbed"],
            rows,
        )
        wrote = ["events.csv"]
        t, xs = _simulate_grid(spec, run=run)
        states = run.sample(t, xs)
        header, prows = profile_rows(model, states, t, xs)
        write_csv(os.path.join(out_dir, "profile.csv"), header, prows)
        wrote.append("profile.csv")
        summary = {
            "method": "front_tracking",
            "events": len(run.events),
            "initial_fronts": run.initial_front_count,
            "max_fronts": run.max_front_count,
            "final_strength": totals[-1],
            "strength_nonincreasing": bool(
                all(b <= a + 1e-10 for a, b in zip(totals[:-1], totals[1:]))
            ),
        }
    else:
        eps = float(prob.get("epsilon", 1e-3))
        cells = int(prob.get("cells", 4096))
        run = viscous_solve(model, spec["data"], eps=eps, cells=cells, T=T)
        prim = run.primitives()
        if model.variant == "traffic":
            states = [TrafficState(r, v, k) for r, v, k in zip(prim[0], prim[1], run.kprof)]
        else:
            states = [PolymerState(s, c, k) for s, c, k in zip(prim[0], prim[1], run.kprof)]
        header, prows = profile_rows(model, states, T, run.x)
        write_csv(os.path.join(out_dir, "profile.csv"), header, prows)
        wrote = ["profile.csv"]
        summary = {
            "method": "viscous",
            "cells": cells,
            "epsilon": eps,
            "steps": run.steps,
            "dt": run.dt,
        }
    if figures:
        render_profile_figure(
            os.path.join(out_dir, "profile.png"),
            header,
            prows,
            f"{spec['model_name']} {summary['method']} profile at T={T}",
        )
        wrote.append("profile.png")
    write_json(os.path.join(out_dir, "summary.json"), summary)
    wrote.append("summary.json")
    return summary, wrote


def _simulate_grid(spec, run=None):
    out = spec["output"].get("profile") or {}
    t = float(out.get("t", spec["T"]))
    if "x_min" in out and "x_max" in out:
        lo, hi = float(out["x_min"]), float(out["x_max"])
    else:
        snap = run.snapshot(t) if run is not None else None
        if snap and snap.positions:
            lo, hi = min(snap.positions) - 0.5, max(snap.positions) + 0.5
        else:
            lo, hi = -2.0, 2.0
    n = int(out.get("points", 1001))
    return t, np.linspace(lo, hi, n)


def _profile_provider(spec, t, xs):
    """Conserved-variable profile of a spec at time t on grid xs."""
    model = spec["model"]
    if spec["problem"]["type"] == "riemann":
        fan = solve_riemann(spec)
        states = sample_fan(fan, t, xs)
    elif spec["method"] == "front_tracking":
        run = front_tracking(
            model,
            spec["data"],
            eps_frac=float(spec["problem"].get("epsilon_frac", 0.01)),
            T=t,
        )
        states = run.sample(t, xs)
    else:
        prob = spec["problem"]
        run = viscous_solve(
            model,
            spec["data"],
            eps=float(prob.get("epsilon", 1e-3)),
            cells=int(prob.get("cells", 4096)),
            T=t,
        )
        # resample the cell profile onto the common grid
        prim = run.primitives()
        if model.variant == "traffic":
            arr = [np.interp(xs, run.x, prim[0]), np.interp(xs, run.x, prim[1]), np.interp(xs, run.x, run.kprof)]
            states = [TrafficState(r, v, k) for r, v, k in zip(*arr)]
        else:
            arr = [np.interp(xs, run.x, prim[0]), np.interp(xs, run.x, prim[1]), np.interp(xs, run.x, run.kprof)]
            states = [PolymerState(s, c, k) for s, c, k in zip(*arr)]
    U = np.stack([conserved(model, st) for st in states], axis=1)
    return U[:2], states


def run_compare(spec_a, spec_b, out_dir, t, tol, figures=True):
    if spec_a["model_name"] != spec_b["model_name"]:
        raise SpecError("compare requires both specs to use the same model")
    xs = _compare_grid(spec_a, spec_b, t)
    Ua, states_a = _profile_provider(spec_a, t, xs)
    Ub, states_b = _profile_provider(spec_b, t, xs)
    dx = xs[1] - xs[0]
    dist = np.abs(Ua - Ub).sum(axis=1) * dx
    report = {
        "schema": "roughwaves.compare/1",
        "model": spec_a["model_name"],
        "t": t,
        "norm": "L1",
        "distance": {"u1": float(dist[0]), "u2": float(dist[1])},
        "threshold": tol,
        "pass": bool(np.max(dist) <= tol),
    }
    write_json(os.path.join(out_dir, "compare.json"), report)
    header, rows_a = profile_rows(spec_a["model"], states_a, t, xs)
    _, rows_b = profile_rows(spec_b["model"], states_b, t, xs)
    merged = [ra + rb[2:] for ra, rb in zip(rows_a, rows_b)]
    write_csv(
        os.path.join(out_dir, "compare.csv"),
        list(header) + [h + "_b" for h in header[2:]],
        merged,
    )
    wrote = ["compare.json", "compare.csv"]
    if figures:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        nf = len(header) - 2
        fig, axes = plt.subplots(nf, 1, sharex=True, figsize=(7, 7))
        for i, ax in enumerate(np.atleast_1d(axes)):
            ax.plot(xs, [r[2 + i] for r in rows_a], lw=1.2, label="a")
            ax.plot(xs, [r[2 + i] for r in rows_b], lw=1.0, ls="--", label="b")
            ax.set_ylabel(header[2 + i])
            ax.grid(alpha=0.3)
        np.atleast_1d(axes)[0].legend()
        np.atleast_1d(axes)[-1].set_xlabel("x")
        fig.suptitle(f"compare at t={t}: L1={max(report['distance'].values()):.4g}")
        fig.savefig(os.path.join(out_dir, "compare.png"), dpi=110, metadata={"Software": "roughwaves"})
        plt.close(fig)
        wrote.append("compare.png")
    return report, wrote


def _compare_grid(spec_a, spec_b, t):
    spans = []
    for sp in (spec_a, spec_b):
        if sp["problem"]["type"] == "riemann":
            spans.append(_auto_span(solve_riemann(sp)) * max(t, 1.0) + 0.5)
        else:
            reach = max(abs(b) for b in sp["data"].breaks)
            spans.append(reach + 4.0 * max(t, 1.0) + 0.5)
    span = max(spans)
    return np.linspace(-span, span, 4001)


def run_validate(spec, out_dir=None, tol=1e-9):
    if spec["problem"]["type"] != "riemann":
        raise SpecError("'validate' expects a riemann problem spec")
    model = spec["model"]
    fan = solve_riemann(spec)
    checks = []

    def check(name, value, bound):
        checks.append({"name": name, "value": float(value), "bound": bound, "pass": bool(value <= bound)})

    rh = max((rankine_hugoniot_residual(model, w) for w in fan.waves), default=0.0)
    check("rankine_hugoniot", rh, tol)
    cont = 0.0
    for w in fan.waves:
        res = continuity_residuals(model, w)
        if res:
            cont = max(cont, max(res.values()))
    check("continuity", cont, tol)
    speeds = fan.speeds()
    disorder = max(
        (max(0.0, a - b) for a, b in zip(speeds[:-1], speeds[1:])), default=0.0
    )
    check("speed_ordering", disorder, 1e-9)
    # self-similarity: profiles at the scaled positions agree exactly
    xs = np.linspace(-1, 1, 101)
    worst = 0.0
    base = fan.sample(1.0, xs)
    for t in (0.5, 2.0):
        other = fan.sample(t, xs * t)
        worst = max(
            worst,
            max(
                max(abs(x - y) for x, y in zip(a.as_tuple(), b.as_tuple()))
                for a, b in zip(base, other)
            ),
        )
    check("self_similarity", worst, 1e-12)
    ok = all(c["pass"] for c in checks)
    report = {"schema": "roughwaves.validate/1", "pass": ok, "checks": checks}
    if out_dir:
        write_json(os.path.join(out_dir, "validate.json"), report)
    return report


# ---------------------------------------------------------------------------
# argument parsing / entry point
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="roughwaves",
        description="Riemann solvers for flow models with rough media coefficients",
    )
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--tol", type=float, default=1e-9, help="residual tolerance")
        sp.add_argument("--seed", type=int, default=0, help="seed recorded in artifacts")
        sp.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    sp = sub.add_parser("solve", help="solve a Riemann problem")
    sp.add_argument("--spec", required=True)
    common(sp)
    sp = sub.add_parser("simulate", help="run a Cauchy simulation")
    sp.add_argument("--spec", required=True)
    common(sp)
    sp = sub.add_parser("compare", help="L1-compare two problem specs")
    sp.add_argument("--spec-a", required=True)
    sp.add_argument("--spec-b", required=True)
    sp.add_argument("--t", type=float, default=1.0, help="comparison time")
    common(sp)
    sp.set_defaults(tol=0.05)
    sp = sub.add_parser("validate", help="run the invariant suite on a spec")
    sp.add_argument("--spec", required=True)
    common(sp)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    figures = not args.no_figures
    try:
        if args.verb == "solve":
            spec = load_spec(args.spec)
            doc, wrote = run_solve(spec, args.out, figures=figures)
            print(f"solve: {len(doc['waves'])} waves; wrote {', '.join(wrote)}")
        elif args.verb == "simulate":
            spec = load_spec(args.spec)
            summary, wrote = run_simulate(spec, args.out, figures=figures)
            print(f"simulate[{summary['method']}]: wrote {', '.join(wrote)}")
        elif args.verb == "compare":
            spec_a = load_spec(args.spec_a)
            spec_b = load_spec(args.spec_b)
            report, wrote = run_compare(
                spec_a, spec_b, args.out, t=args.t, tol=args.tol, figures=figures
            )
            print(
                f"compare: L1={report['distance']} pass={report['pass']}; wrote {', '.join(wrote)}"
            )
            return EXIT_OK if report["pass"] else EXIT_SOLVER
        elif args.verb == "validate":
            spec = load_spec(args.spec)
            report = run_validate(spec, args.out, tol=args.tol)
            for c in report["checks"]:
                print(f"  {c['name']}: {c['value']:.3e} <= {c['bound']:.1e} -> {'pass' if c['pass'] else 'FAIL'}")
            if not report["pass"]:
                return EXIT_SOLVER
    except SpecError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FanError, InfeasibleJumpError, DomainError, RuntimeError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

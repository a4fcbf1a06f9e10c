import json
import os

import pytest

from roughwaves.cli import (
    EXIT_INPUT,
    EXIT_OK,
    SpecError,
    fan_document,
    fan_document_roundtrip,
    main,
    parse_spec,
    solve_riemann,
)

TRAFFIC_RIEMANN = {
    "model": "traffic",
    "params": {"gamma": 1.5},
    "problem": {
        "type": "riemann",
        "left": {"rho": 2.0 ** (2.0 / 3.0), "v": 1.0, "k": 1.0},
        "right": {"rho": 2.0 ** (2.0 / 3.0), "v": 2.0, "k": 1.0},
    },
    "output": {"fan": True, "profile": {"t": 1.0, "x_min": -3, "x_max": 3, "points": 201}},
    "seed": 0,
}


def write_spec(tmp_path, payload, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload), encoding="utf-8")
    return str(p)


def test_parse_spec_schema_errors():
    with pytest.raises(SpecError):
        parse_spec({"model": "nope", "problem": {"type": "riemann"}})
    with pytest.raises(SpecError):
        parse_spec({"model": "traffic", "problem": {"type": "wible"}})
    with pytest.raises(SpecError):
        parse_spec(
            {
                "model": "polymer",
                "problem": {"type": "riemann", "left": {"s": 2.0, "c": 0.1, "k": 1.0}, "right": {"s": 0.5, "c": 0.1, "k": 1.0}},
            }
        )
    with pytest.raises(SpecError):
        parse_spec(
            {
                "model": "polymer",
                "problem": {
                    "type": "cauchy",
                    "breakpoints": [0.0],
                    "states": [{"s": 0.5, "c": 0.1, "k": 1.0}] * 3,
                    "method": "front_tracking",
                },
            }
        )  # front tracking restricted to traffic


def test_cli_exit_codes(tmp_path):
    bad = write_spec(tmp_path, {"model": "traffic", "problem": {"type": "riemann"}})
    assert main(["solve", "--spec", bad, "--out", str(tmp_path / "o")]) == EXIT_INPUT
    assert main(["solve", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == EXIT_INPUT
    good = write_spec(tmp_path, TRAFFIC_RIEMANN, "good.json")
    assert main(["solve", "--spec", good, "--out", str(tmp_path / "o"), "--no-figures"]) == EXIT_OK


def test_traffic_worked_example_document(tmp_path):
    spec = parse_spec(TRAFFIC_RIEMANN)
    fan = solve_riemann(spec)
    doc = fan_document(spec, fan)
    fams = [w["family"] for w in doc["waves"]]
    assert fams == ["v", "rho"]
    assert doc["waves"][0]["kind"] == "rarefaction"
    # middle density from inverting w - v = k rho^gamma by hand: rho_m = 1
    assert doc["waves"][1]["left"]["rho"] == pytest.approx(1.0, abs=1e-12)
    assert doc["labels"]["case"] == "no_vacuum"
    assert doc["diagnostics"]["max_rankine_hugoniot"] <= 1e-9


def test_left_equals_right_empty_fan(tmp_path):
    payload = dict(TRAFFIC_RIEMANN)
    payload["problem"] = dict(payload["problem"], right=payload["problem"]["left"])
    spec = parse_spec(payload)
    doc = fan_document(spec, solve_riemann(spec))
    assert doc["waves"] == []


def test_fan_document_roundtrip():
    spec = parse_spec(TRAFFIC_RIEMANN)
    doc = fan_document(spec, solve_riemann(spec))
    assert fan_document_roundtrip(doc) == doc


def test_artifacts_deterministic(tmp_path):
    spec_path = write_spec(tmp_path, TRAFFIC_RIEMANN)
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["solve", "--spec", spec_path, "--out", out1]) == EXIT_OK
    assert main(["solve", "--spec", spec_path, "--out", out2]) == EXIT_OK
    for name in ("fan.json", "profile.csv", "profile.png"):
        with open(os.path.join(out1, name), "rb") as fa, open(os.path.join(out2, name), "rb") as fb:
            assert fa.read() == fb.read(), f"{name} not byte-identical"


def test_validate_verb(tmp_path):
    spec_path = write_spec(tmp_path, TRAFFIC_RIEMANN)
    assert main(["validate", "--spec", spec_path, "--out", str(tmp_path / "v")]) == EXIT_OK
    report = json.load(open(tmp_path / "v" / "validate.json"))
    assert report["pass"] is True
    names = {c["name"] for c in report["checks"]}
    assert {"rankine_hugoniot", "continuity", "speed_ordering", "self_similarity"} <= names


def test_simulate_front_tracking_events_monotone(tmp_path):
    payload = {
        "model": "traffic",
        "params": {"gamma": 1.5},
        "problem": {
            "type": "cauchy",
            "breakpoints": [-1.0, 0.5],
            "states": [
                {"rho": 1.2, "v": 0.9, "k": 1.0},
                {"rho": 1.4, "v": 0.7, "k": 1.0},
                {"rho": 1.1, "v": 1.0, "k": 1.0},
            ],
            "T": 5.0,
            "method": "front_tracking",
            "epsilon_frac": 0.01,
        },
        "output": {"profile": {"t": 5.0, "points": 101}},
    }
    spec_path = write_spec(tmp_path, payload)
    out = str(tmp_path / "ft")
    assert main(["simulate", "--spec", spec_path, "--out", out, "--no-figures"]) == EXIT_OK
    rows = open(os.path.join(out, "events.csv")).read().strip().splitlines()
    header = rows[0].split(",")
    col = header.index("total_strength")
    totals = [float(r.split(",")[col]) for r in rows[1:]]
    assert all(b <= a + 1e-10 for a, b in zip(totals, totals[1:]))


def test_compare_identical_specs_zero_distance(tmp_path):
    a = write_spec(tmp_path, TRAFFIC_RIEMANN, "a.json")
    b = write_spec(tmp_path, TRAFFIC_RIEMANN, "b.json")
    out = str(tmp_path / "cmp")
    assert main(["compare", "--spec-a", a, "--spec-b", b, "--out", out, "--no-figures"]) == EXIT_OK
    rep = json.load(open(os.path.join(out, "compare.json")))
    assert max(rep["distance"].values()) == 0.0
    assert rep["pass"] is True


def test_compare_incompatible_models(tmp_path):
    a = write_spec(tmp_path, TRAFFIC_RIEMANN, "a.json")
    poly = {
        "model": "polymer",
        "problem": {
            "type": "riemann",
            "left": {"s": 0.7, "c": 0.2, "k": 1.0},
            "right": {"s": 0.4, "c": 0.8, "k": 1.0},
        },
    }
    b = write_spec(tmp_path, poly, "b.json")
    assert main(["compare", "--spec-a", a, "--spec-b", b, "--out", str(tmp_path / "c")]) == EXIT_INPUT


def test_gravity_case_label_serialised(tmp_path):
    payload = {
        "model": "polymer_gravity",
        "params": {"gravity_number": 3.0},
        "problem": {
            "type": "riemann",
            "left": {"s": 0.10, "c": 0.2, "k": 1.0},
            "right": {"s": 0.30, "c": 0.7, "k": 2.0},
        },
    }
    spec = parse_spec(payload)
    doc = fan_document(spec, solve_riemann(spec))
    assert doc["labels"]["case"] == "negative"
    assert "I1" in doc["labels"] and "I2" in doc["labels"]

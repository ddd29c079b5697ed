import csv
import json
import math

import pytest
import yaml

from gasnet_wft.cli import main
from gasnet_wft.io import EVENTS_HEADER, FUNCTIONALS_HEADER, SNAPSHOT_HEADER

CONSTANTS = {"K": 0.01, "K_J": 4.0, "C_b": 1.3, "c_min": 0.8, "Lambda_max": 2.0}


def _doc(**run):
    return {
        "law": {"kappa": 1.0, "gamma_exp": 2.0},
        "network": {
            "n_pipes": 2,
            "nu_norms": [1.0, 1.5],
            "gains": [0.002, 0.002],
            "equilibria": [[1.0, 0.15], [1.0062615094842269, -0.1]],
            "subsonic_radius": 0.2,
        },
        "initial": [
            [[0.3, 1.02, 0.15], [1.0, 1.0, 0.15]],
            [[0.5, 1.0062615094842269, -0.1], [1.0, 1.03, -0.08]],
        ],
        "run": {"epsilon": 0.01, "t_end": 0.3, "seed": 0, "snapshot_times": [0.1], **run},
        "functionals": {"gamma_w": 0.0, "constants": dict(CONSTANTS)},
    }


def _write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return str(p)


def _header(path):
    with open(path) as fh:
        return tuple(next(csv.reader(fh)))


def test_run_writes_outputs(tmp_path):
    sc = _write(tmp_path, "a.yaml", _doc())
    out = tmp_path / "out"
    assert main(["run", sc, "--out", str(out), "--quiet"]) == 0
    assert _header(out / "functionals.csv") == FUNCTIONALS_HEADER
    assert _header(out / "events.csv") == EVENTS_HEADER
    snaps = sorted(p.name for p in out.glob("snapshot_t*.csv"))
    assert snaps == ["snapshot_t0.100000.csv", "snapshot_t0.300000.csv"]
    assert _header(out / snaps[0]) == SNAPSHOT_HEADER
    rep = json.loads((out / "report.json").read_text())
    assert list(rep)[0] == "schema_version"
    assert rep["passed"] and rep["n_events"] > 0
    assert (out / "plot_results.py").exists()
    # full precision: values round-trip
    with open(out / "functionals.csv") as fh:
        row = next(csv.DictReader(fh))
    assert repr(float(row["J"])) == repr(float(row["J"]))
    assert len(row["J"].replace(".", "").replace("e-", "").lstrip("0")) >= 15


def test_run_bit_identical(tmp_path):
    sc = _write(tmp_path, "a.yaml", _doc())
    for d in ("o1", "o2"):
        assert main(["run", sc, "--out", str(tmp_path / d), "--quiet", "--seed", "5"]) == 0
    for name in ("functionals.csv", "events.csv", "snapshot_t0.300000.csv"):
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()


def test_run_equilibrium(tmp_path):
    doc = _doc()
    del doc["initial"]
    out = tmp_path / "out"
    assert main(["run", _write(tmp_path, "eq.yaml", doc), "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["n_events"] == 0 and rep["passed"]
    with open(out / "functionals.csv") as fh:
        assert all(float(r["TV"]) == 0.0 for r in csv.DictReader(fh))


def test_bad_gains_exit_2(tmp_path, capsys):
    doc = _doc()
    doc["network"]["gains"] = [0.5, 0.002]
    doc["functionals"]["verify_decay"] = True
    doc["network"]["nu_norms"] = [1.0, 1.5]
    assert main(["run", _write(tmp_path, "bad.yaml", doc), "--out", str(tmp_path / "o")]) == 2
    assert "network.gains[0]" in capsys.readouterr().err


@pytest.mark.parametrize("patch, path", [
    ({"run": {"epsilon": -1.0}}, "run.epsilon"),
    ({"initial": [[[0.5, 1.0, 0.15]], [[1.0, 1.0, -0.1]]]}, "initial[0]"),
])
def test_config_errors_name_field(tmp_path, capsys, patch, path):
    doc = _doc()
    for k, v in patch.items():
        doc[k] = {**doc[k], **v} if isinstance(v, dict) else v
    assert main(["run", _write(tmp_path, "x.yaml", doc), "--out", str(tmp_path / "o")]) == 2
    assert path in capsys.readouterr().err


def test_invalid_yaml_exit_2(tmp_path):
    p = tmp_path / "x.yaml"
    p.write_text("law: [unclosed")
    assert main(["run", str(p), "--quiet"]) == 2


def test_interaction_cap_exit_4(tmp_path):
    sc = _write(tmp_path, "a.yaml", _doc(interaction_cap=1))
    assert main(["run", sc, "--out", str(tmp_path / "o"), "--quiet"]) == 4


def test_calibrate(tmp_path):
    sc = _write(tmp_path, "a.yaml", _doc())
    assert main(["calibrate", sc, "--samples", "0", "--quiet"]) == 2
    outs = []
    for name in ("c1.yaml", "c2.yaml"):
        out = tmp_path / name
        assert main(["calibrate", sc, "--samples", "30", "--out", str(out), "--quiet"]) == 0
        outs.append(out.read_text())
    assert outs[0] == outs[1]
    assert "doubling n_samples" in outs[0]
    block = yaml.safe_load(outs[0])["functionals"]["constants"]
    assert set(block) == set(CONSTANTS) and block["K_J"] >= 1.0
    # the block is usable verbatim in a scenario
    doc = _doc()
    doc["functionals"]["constants"] = block
    assert main(["run", _write(tmp_path, "b.yaml", doc), "--out", str(tmp_path / "o"), "--quiet"]) == 0


def test_refine_identical_eps(tmp_path):
    sc = _write(tmp_path, "a.yaml", _doc())
    out = tmp_path / "r"
    assert main(["refine", sc, "--epsilons", "0.01", "0.01", "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["l1_successive"] == [0.0]
    assert main(["refine", sc, "--epsilons", "0.01", "--out", str(out), "--quiet"]) == 2


def test_refine_levels(tmp_path):
    sc = _write(tmp_path, "a.yaml", _doc(t_end=0.2))
    out = tmp_path / "r"
    assert main(["refine", sc, "--epsilons", "0.02", "0.01", "0.005", "--out", str(out), "--quiet"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert len(rep["l1_successive"]) == 2 and all(d > 0 for d in rep["l1_successive"])
    assert _header(out / "refine.csv") == ("level", "epsilon", "n_events", "l1_to_next", "order")


def test_compare_identical_is_zero(tmp_path):
    sc = _write(tmp_path, "a.yaml", _doc())
    out = tmp_path / "cmp.json"
    assert main(["compare", sc, sc, "--out", str(out), "--quiet"]) == 0
    rep = json.loads(out.read_text())
    assert rep["sup_l1"] == 0.0 and rep["max_phi_jump"] == 0.0
    with open(out.with_suffix(".csv")) as fh:
        assert all(float(r["phi"]) == 0.0 for r in csv.DictReader(fh))


def test_compare_perturbed(tmp_path):
    a = _write(tmp_path, "a.yaml", _doc())
    doc = _doc()
    doc["initial"][0][0][1] = 1.021
    b = _write(tmp_path, "b.yaml", doc)
    out = tmp_path / "cmp.json"
    assert main(["compare", a, b, "--out", str(out), "--quiet"]) == 0
    rep = json.loads(out.read_text())
    assert rep["l1_initial"] == pytest.approx(0.3 * 0.001, rel=1e-9)
    assert math.isfinite(rep["lipschitz_ratio"]) and rep["lipschitz_ratio"] >= 1.0
    assert rep["phi_nonincreasing_at_events"]

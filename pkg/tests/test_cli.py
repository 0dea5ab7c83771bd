import csv
import json

import numpy as np
import pytest

from lattice_energy.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_energy_plain_and_json(capsys):
    code, out, _ = run(capsys, "energy", "union3:1/3,1/3;2/3,2/3", "--alpha", "3.5", "--pi-scaled")
    assert code == 0
    assert "pi_scaled: True" in out
    code, out, _ = run(capsys, "energy", "union3:1/3,1/3;2/3,2/3", "--alpha", "3.5", "--pi-scaled", "--json")
    data = json.loads(out)
    assert abs(data["value"] - 0.18279) < 1e-5
    assert data["error_bound"] < 1e-10


def test_energy_defaults_to_raw_convention(capsys):
    code, out, _ = run(capsys, "energy", "hexagonal@1", "--alpha", "1e6", "--json")
    data = json.loads(out)
    assert code == 0 and data["pi_scaled"] is False
    assert data["value"] < 1e-100


def test_agm_and_direct_paths_agree(capsys):
    vals = []
    for path in ("agm", "direct"):
        _, out, _ = run(capsys, "energy", "honeycomb@1", "--alpha", "1", "--path", path, "--json")
        vals.append(json.loads(out))
    assert abs(vals[0]["value"] - vals[1]["value"]) <= vals[0]["error_bound"] + vals[1]["error_bound"]


@pytest.mark.parametrize("argv", [["energy", "union3:1/3,x", "--alpha", "1"], ["energy", "hexagonal", "--alpha", "-1"]])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["energy", "square"])
    assert info.value.code == 2
    capsys.readouterr()


def test_numeric_failure_exits_3(capsys):
    code, _, err = run(capsys, "energy", "hexagonal", "--alpha", "1", "--tol", "1e-30")
    assert code == 3
    assert "numeric failure" in err


def test_sweep_csv(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "hexagonal", "honeycomb", "--alpha-grid", "0.01:100:12:log", "--out", str(out))
    assert code == 0
    text = out.read_text()
    meta = [l for l in text.splitlines() if l.startswith("#")]
    assert any(l.startswith("# generated ") for l in meta)
    assert "# pi_scaled: True" in meta
    rows = list(csv.DictReader(l for l in text.splitlines() if not l.startswith("#")))
    assert len(rows) == 12
    assert all(float(r["margin_1"]) > float(r["margin_err_1"]) for r in rows)


def test_sweep_rows_are_bit_stable(capsys, tmp_path):
    texts = []
    for k in range(2):
        p = tmp_path / f"s{k}.csv"
        run(capsys, "sweep", "square", "--alpha-grid", "0.5:2:4", "--out", str(p))
        texts.append([l for l in p.read_text().splitlines() if not l.startswith("#")])
    assert texts[0] == texts[1]


def test_single_config_sweep_matches_energy(capsys, monkeypatch):
    monkeypatch.setenv("LATTICE_ENERGY_THREADS", "1")
    _, out, _ = run(capsys, "sweep", "honeycomb", "--alpha-grid", "1.5:1.5:1", "--json")
    row = json.loads(out)["rows"][0]
    _, out, _ = run(capsys, "energy", "honeycomb", "--alpha", "1.5", "--pi-scaled", "--json")
    assert row[1] == json.loads(out)["value"]


def test_bad_thread_setting(capsys, monkeypatch):
    monkeypatch.setenv("LATTICE_ENERGY_THREADS", "many")
    code, _, _ = run(capsys, "sweep", "square", "--alpha-grid", "1:2:2")
    assert code == 2


def test_optimize_targets(capsys):
    _, out, _ = run(capsys, "optimize", "union2", "--alpha", "1", "--json")
    np.testing.assert_allclose(json.loads(out)["argmin"], [0.5, 0.5], atol=1e-6)
    _, out, _ = run(capsys, "optimize", "union2", "--base", "hexagonal", "--alpha", "1", "--json")
    x = np.array(json.loads(out)["argmin"])
    assert min(np.max(np.abs(x - p)) for p in (1 / 3, 2 / 3)) < 1e-6
    _, out, _ = run(capsys, "optimize", "1d", "--n", "3", "--alpha", "1", "--json")
    np.testing.assert_allclose(json.loads(out)["gaps"], 1 / 3, atol=1e-6)


def test_curves_outputs(capsys, tmp_path):
    csv_path, svg_path = tmp_path / "c.csv", tmp_path / "c.svg"
    code, _, _ = run(capsys, "curves", "--alpha", "2", "--grid", "256", "--out-csv", str(csv_path), "--out-svg", str(svg_path))
    assert code == 0
    rows = [l.split(",") for l in csv_path.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == ["x1", "x2", "curve_id", "polyline"]
    inter = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r[2] == "intersection"])
    assert np.min(np.max(np.abs(inter - 1 / 3), axis=1)) < 1e-6
    svg = svg_path.read_text()
    assert svg.count('class="intersection"') == 4
    assert "stroke-dasharray" in svg


def test_curves_note_a_count_other_than_four(capsys, tmp_path):
    csv_path = tmp_path / "c.csv"
    run(capsys, "curves", "--alpha", "30", "--grid", "256", "--out-csv", str(csv_path))
    meta = [l for l in csv_path.read_text().splitlines() if l.startswith("# n_intersections")]
    assert meta


def test_render(capsys, tmp_path):
    svg_path = tmp_path / "r.svg"
    code, out, _ = run(capsys, "render", "honeycomb", "--radius", "4", "--out-svg", str(svg_path), "--json")
    assert code == 0
    data = json.loads(out)
    assert all(c > 0 for c in data["per_shift_class"])
    assert abs(data["n_points"] - data["expected"]) < 2 * 3.2 * 4
    svg = svg_path.read_text()
    assert svg.startswith("<svg") and 'fill="none" stroke="#c0392b"' in svg
    _, out, _ = run(capsys, "render", "square", "--radius", "1.1", "--out-svg", str(svg_path), "--json")
    # the origin and its four neighbours
    assert json.loads(out)["n_points"] == 5


def test_verify_report(capsys, tmp_path):
    rep = tmp_path / "rep.json"
    code, out, _ = run(capsys, "verify", "--only", "aux_g_h", "cubic_agm", "--report", str(rep))
    assert code == 0
    data = json.loads(rep.read_text())
    assert data["all_passed"] is True
    assert {c["name"] for c in data["checks"]} == {"aux_g_h", "cubic_agm"}
    for c in data["checks"]:
        assert set(c) == {"name", "grid", "margin", "passed", "error_budget", "details"}
    assert out.count("PASS") == 2


def test_verify_failure_and_convergence_exit_codes(capsys):
    code, out, _ = run(capsys, "verify", "--only", "curve_counts")
    assert code == 1 and "FAIL curve_counts" in out
    code, _, err = run(capsys, "verify", "--tol", "1e-20", "--only", "path_agreement")
    assert code == 3 and "numeric failure" in err

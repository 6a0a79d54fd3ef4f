import json

from switchosc.cli import main


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_orbit_find_prints_paper_value(capsys):
    code, out, _ = run(["orbit", "find", "--model", "linear", "--a", "0.01"], capsys)
    assert code == 0
    assert "0.626124996" in out
    assert "multiplier" in out


def test_orbit_find_nonlinear(capsys):
    code, out, _ = run(["orbit", "find", "--model", "nonlinear", "--a", "0.5"], capsys)
    assert code == 0
    assert "x_a" in out


def test_orbit_sliding_absence_exit_code(capsys):
    code, out, _ = run(["orbit", "find", "--model", "linear", "--a", "0.001",
                        "--sliding"], capsys)
    assert code == 1
    assert "no sliding" in out


def test_simulate_writes_csv_and_svg(tmp_path, capsys):
    code, out, _ = run(["simulate", "--model", "nonlinear", "--a", "0.5",
                        "--x0", "0", "--y0", "0", "--x-end", "4.4",
                        "--out-dir", str(tmp_path), "--plot"], capsys)
    assert code == 0
    csv = (tmp_path / "trajectory.csv").read_text()
    assert csv.splitlines()[0] == "x,y_or_v,mode,branch,event"
    assert "sliding" in csv
    svg = (tmp_path / "trajectory.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg and "</svg>" in svg
    assert "http" not in svg.replace("http://www.w3.org/2000/svg", "")


def test_plot_from_csv_round_trip(tmp_path, capsys):
    code, _, _ = run(["simulate", "--model", "linear", "--a", "2.0",
                      "--x0", "3.3333333333333335", "--y0", "0",
                      "--x-end", "8.0", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    csv_path = tmp_path / "trajectory.csv"
    out1 = tmp_path / "p1.svg"
    out2 = tmp_path / "p2.svg"
    assert run(["plot-from-csv", str(csv_path), "--out", str(out1)], capsys)[0] == 0
    assert run(["plot-from-csv", str(csv_path), "--out", str(out2)], capsys)[0] == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_manifolds_table(tmp_path, capsys):
    code, out, _ = run(["manifolds", "--model", "nonlinear", "--range", "0:8",
                        "--a", "1.0", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    body = (tmp_path / "manifolds.csv").read_text()
    assert "n,x_lo,x_hi,stability,lambda_mid,v0_mid" in body
    for n in (1, 2, 3, 4):
        assert f"n={n} domain=({2 * n / 3.0:.12g}, {2.0 * n:.12g})" in out


def test_map_table(tmp_path, capsys):
    code, _, _ = run(["map", "--model", "linear", "--a", "0.01",
                      "--epsilon", "0.0025", "--grid", "0.55:0.65:3",
                      "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    rows = (tmp_path / "maps.csv").read_text().splitlines()
    assert rows[0] == "x,p_minus,p_composite,p_eps"
    assert len(rows) == 4


def test_ageing_table(tmp_path, capsys):
    code, _, _ = run(["ageing", "--model", "nonlinear", "--range", "0:12",
                      "--a", "1.0", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    body = (tmp_path / "ageing.csv").read_text()
    assert "3,4," in body  # branch 3 has width 4


def test_reproduce_scenario(tmp_path, capsys):
    code, out, _ = run(["reproduce", "E1", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert "PASS E1/x0_value" in out
    assert (tmp_path / "E1" / "results.csv").exists()


def test_reproduce_unknown_scenario_usage_error(tmp_path, capsys):
    code, _, err = run(["reproduce", "nope", "--out-dir", str(tmp_path)], capsys)
    assert code == 2
    assert "unknown scenario" in err


def test_validate_psi(tmp_path, capsys):
    good = tmp_path / "cubic.json"
    good.write_text(json.dumps({"name": "cubic", "type": "poly",
                                "coeffs": [0.0, 1.5, 0.0, -0.5]}))
    assert run(["validate-psi", str(good)], capsys)[0] == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "bad", "type": "poly",
                               "coeffs": [0.0, 0.5]}))
    code, out, _ = run(["validate-psi", str(bad)], capsys)
    assert code == 1 and "FAIL" in out


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model": "linear", "a": 123.0}))
    code, out, _ = run(["--config", str(cfg), "orbit", "find", "--a", "0.01"], capsys)
    assert code == 0
    assert "0.626124996" in out  # the flag a=0.01 wins over the config value

import csv
import json

import pytest

from cqa.harness.cli import build_parser, main, parse_grid, parse_sizes, resolve


def test_parsers():
    assert parse_sizes("8,10, 12") == [8, 10, 12]
    assert len(parse_grid("21")) == 21
    assert parse_grid("0,0.5,1") == [0.0, 0.5, 1.0]


def test_config_and_override(tmp_path):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text('sizes = "10,12"\nper-size = 4\ns_grid = 11\nseed = 9\n')
    cfg = resolve(build_parser().parse_args(["scaling", "--config", str(cfg_file), "--seed", "3"]))
    assert cfg["sizes"] == [10, 12] and cfg["per_size"] == 4 and cfg["seed"] == 3
    assert len(cfg["grid"]) == 11


def test_unknown_config_key(tmp_path):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text("colour = 3\n")
    with pytest.raises(SystemExit):
        resolve(build_parser().parse_args(["verify", "--config", str(cfg_file)]))


def test_generate_and_gap(tmp_path, capsys):
    inst = tmp_path / "inst"
    assert main(["generate", "--sizes", "10", "--per-size", "2", "--seed", "1", "--out", str(inst)]) == 0
    files = sorted(inst.glob("*.json"))
    assert len(files) == 2
    capsys.readouterr()
    out = tmp_path / "curve.csv"
    assert main(["gap", "--instance", str(files[0]), "--s-grid", "11", "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report["results"]) == {"cqa", "penalty"}
    rows = list(csv.reader((tmp_path / "curve.cqa.csv").open()))
    assert rows[0] == ["s", "e0", "e1", "gap"] and len(rows) == 12
    assert (tmp_path / "curve.penalty.csv").exists()


def test_generate_other_problems(tmp_path):
    assert main(["generate", "--problem", "sat", "--sizes", "6", "--per-size", "1", "--out", str(tmp_path / "s")]) == 0
    data = json.loads(next((tmp_path / "s").glob("*.json")).read_text())
    assert data["problem"] == "sat" and len(data["payload"]["clauses"]) == 24
    assert main(["generate", "--problem", "gc", "--sizes", "4", "--degree", "2", "--colors", "3",
                 "--per-size", "1", "--out", str(tmp_path / "g")]) == 0
    data = json.loads(next((tmp_path / "g").glob("*.json")).read_text())
    assert data["params"]["n_c"] == 3


def test_generate_screening_failure(tmp_path, capsys):
    assert main(["generate", "--sizes", "8", "--per-size", "1", "--out", str(tmp_path)]) == 2
    assert "unique-ground" in capsys.readouterr().err


def test_scaling(tmp_path, capsys):
    out = tmp_path / "s.csv"
    rc = main(["scaling", "--sizes", "10", "--per-size", "2", "--s-grid", "11", "--out", str(out), "--method", "cqa"])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,instance_id,seed,method,gap_min,s_min,e0_final,wall_time_s"
    assert len(lines) == 3 and all(",cqa," in x for x in lines[1:])
    assert all(x.endswith(",0") for x in lines[1:])


def test_resources(tmp_path, capsys):
    inst = tmp_path / "inst"
    main(["generate", "--sizes", "12", "--per-size", "1", "--out", str(inst)])
    capsys.readouterr()
    f = next(inst.glob("*.json"))
    assert main(["resources", "--instance", str(f), "--ordering", "greedy"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["methods"]["penalty"]["additional_edges"] == 66 - 36
    assert rep["methods"]["cqa"]["additional_edges"] <= 12


def test_verify(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("[PASS]") >= 10

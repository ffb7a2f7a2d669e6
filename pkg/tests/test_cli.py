import csv
import json

import pytest

from conftest import TOY
from fedpoison import fl
from fedpoison.cli import main
from fedpoison.equilibrium import analytic_table
from fedpoison.fl import AccuracyTable


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    fl.save_table_csv(AccuracyTable(2, dict(TOY)), path)
    return path


@pytest.fixture
def fast_cfg(tmp_path):
    path = tmp_path / "fast.cfg"
    path.write_text("profile = fast  # CI scale\nn = 2\ntrials = 1\n")
    return path


def test_table_rows_and_rerun(tmp_path, fast_cfg, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(fast_cfg), "--seed", "7", "--out", str(a), "table"]) == 0
    assert main(["--config", str(fast_cfg), "--seed", "7", "--out", str(b), "table"]) == 0
    out = capsys.readouterr().out.split()
    assert out == [str(a / "table_n2.csv"), str(b / "table_n2.csv")]
    assert len(rows(a / "table_n2.csv")) == 6
    assert (a / "table_n2.csv").read_bytes() == (b / "table_n2.csv").read_bytes()
    assert fl.load_table_csv(a / "table_n2.csv").n == 2


def test_table_seed_changes_output(tmp_path, fast_cfg):
    main(["--config", str(fast_cfg), "--seed", "1", "--out", str(tmp_path / "a"), "table"])
    main(["--config", str(fast_cfg), "--seed", "2", "--out", str(tmp_path / "b"), "table"])
    assert (tmp_path / "a" / "table_n2.csv").read_bytes() != (tmp_path / "b" / "table_n2.csv").read_bytes()


def test_bounds_toy(tmp_path, toy_csv):
    assert main(["--out", str(tmp_path), "bounds", str(toy_csv), "--c-d", "0"]) == 0
    (row,) = rows(tmp_path / "bounds.csv")
    assert float(row["best_utility"]) == 0.9 and row["best_i"] == "2"
    assert float(row["worst_utility"]) <= float(row["best_utility"])


def test_bounds_rows_ordered(tmp_path):
    for n in (3, 5, 4):
        fl.save_table_csv(analytic_table(n), tmp_path / f"table_n{n}.csv")
    assert main(["--out", str(tmp_path / "o"), "bounds", str(tmp_path), "--c-d", "0.02"]) == 0
    got = rows(tmp_path / "o" / "bounds.csv")
    assert [r["n"] for r in got] == ["3", "4", "5"]
    assert all(float(r["worst_utility"]) <= float(r["best_utility"]) for r in got)


def test_bounds_malformed_table(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("i,k,accuracy\n0,0,0.5\n1,0,oops\n1,1,0.2\n")
    assert main(["--out", str(tmp_path), "bounds", str(bad)]) == 1
    assert "line 3" in capsys.readouterr().err


def test_game2_fixture(tmp_path, toy_csv):
    assert main(["--out", str(tmp_path), "game2", str(toy_csv), "--c-a", "1.0", "--c-d", "0.05"]) == 0
    doc = json.loads((tmp_path / "game2.json").read_text())
    assert {(e["p"], e["q"], e["kind"]) for e in doc["equilibria"]} == {(0.0, 1.0, "boundary")}
    assert all(e["verified"] for e in doc["equilibria"])


def test_game2_sweep_rows(tmp_path, toy_csv):
    assert main(["--out", str(tmp_path), "game2", str(toy_csv), "--sweep", "0:0.4:9"]) == 0
    got = rows(tmp_path / "game2_sweep.csv")
    assert len(got) == 9
    assert list(got[0]) == ["cost", "p", "q", "u_attacker", "u_defender"]
    assert float(got[-1]["cost"]) == pytest.approx(0.4)


def test_game2_needs_two_clients(tmp_path, capsys):
    path = tmp_path / "t3.csv"
    fl.save_table_csv(analytic_table(3), path)
    assert main(["--out", str(tmp_path), "game2", str(path)]) == 1
    assert "two-client table required" in capsys.readouterr().err


def test_game2_bad_sweep(tmp_path, toy_csv):
    assert main(["--out", str(tmp_path), "game2", str(toy_csv), "--sweep", "0:1"]) == 1


def test_gamen_fixture(tmp_path, toy_csv):
    assert main(["--out", str(tmp_path), "gamen", str(toy_csv), "--c-a", "0.5", "--c-d", "0.05"]) == 0
    (rec,) = json.loads((tmp_path / "gamen.json").read_text())["results"]
    sel = rec["selected"]
    assert (rec["n"], sel["i_star"], sel["m_star"]) == (2, 2, 0)
    assert sel["u_defender"] == pytest.approx(0.8) and sel["u_attacker"] == pytest.approx(-0.9)
    (row,) = rows(tmp_path / "gamen_sweep.csv")
    assert (row["n"], row["i_star"], row["m_star"]) == ("2", "2", "0")


def test_gamen_no_equilibrium(tmp_path, toy_csv):
    assert main(["--out", str(tmp_path), "gamen", str(toy_csv), "--c-a", "0.3", "--c-d", "0.05"]) == 0
    (rec,) = json.loads((tmp_path / "gamen.json").read_text())["results"]
    assert rec["no_pure_equilibrium"] is True
    assert rec["equilibria"] == [] and len(rec["cycle"]) >= 2
    assert set(rec["best_responses"]) == {"attacker", "defender"}
    (row,) = rows(tmp_path / "gamen_sweep.csv")
    assert row["u_defender"] == "nan"


def test_gamen_directory(tmp_path):
    tables = tmp_path / "tables"
    tables.mkdir()
    for n in (5, 2, 4, 3):
        fl.save_table_csv(analytic_table(n), tables / f"table_n{n}.csv")
    assert main(["--out", str(tmp_path / "o"), "gamen", str(tables), "--c-a", "0.5", "--c-d", "0.02"]) == 0
    assert [r["n"] for r in rows(tmp_path / "o" / "gamen_sweep.csv")] == ["2", "3", "4", "5"]


def test_config_costs_used(tmp_path, toy_csv):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("c_A = 0.5\nc_D = 0.05\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "gamen", str(toy_csv)]) == 0
    doc = json.loads((tmp_path / "gamen.json").read_text())
    assert (doc["c_A"], doc["c_D"]) == (0.5, 0.05)


def test_unknown_config_keys(tmp_path, toy_csv, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("n = 2\nround = 5\nlerning_rate = 0.1\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "bounds", str(toy_csv)]) == 1
    err = capsys.readouterr().err
    assert "lerning_rate" in err and "round" in err


@pytest.mark.parametrize("text", ["profile = huge\n", "profile = paper\nrounds = 5\n", "n = 0\n", "just words\n", "noise_power = -1\n"])
def test_invalid_config(tmp_path, toy_csv, text):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(text)
    assert main(["--config", str(cfg), "--out", str(tmp_path), "bounds", str(toy_csv)]) == 1


def test_unwritable_output(tmp_path, toy_csv):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["--out", str(blocker / "sub"), "bounds", str(toy_csv)]) == 2


def test_missing_table_is_io_error(tmp_path):
    assert main(["--out", str(tmp_path), "bounds", str(tmp_path / "nope.csv")]) == 2


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["--seed", "-1", "bounds", "x.csv"], ["table", "--n", "0"]])
def test_usage_errors(argv, tmp_path):
    assert main(["--out", str(tmp_path)] + argv if argv else argv) == 1


def test_json_outputs_round_trip(tmp_path, toy_csv):
    main(["--out", str(tmp_path), "game2", str(toy_csv), "--c-a", "0.1", "--c-d", "0.1"])
    main(["--out", str(tmp_path), "gamen", str(toy_csv), "--c-a", "0.3", "--c-d", "0.05"])
    for name in ("game2.json", "gamen.json"):
        text = (tmp_path / name).read_text()
        assert json.dumps(json.loads(text), indent=2) + "\n" == text

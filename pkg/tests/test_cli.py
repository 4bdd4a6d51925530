import json
import shutil

import pytest

from conftest import GOLDEN, SOLOMON, random_case
from mpisp import cli
from mpisp import instance as inst_mod

FAST = ["--n-init", "3", "--max-local-iter", "10", "--max-perturbation", "1"]


@pytest.fixture
def toy_file(tmp_path):
    inst, _ = random_case(77, n=7, m=2, w=2)
    path = tmp_path / "toy.json"
    path.write_text(inst_mod.dumps(inst))
    return path


def test_gen_single_file(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    shutil.copy(SOLOMON / "c101.txt", src)
    assert cli.main(["gen", str(src), str(tmp_path / "out"), "--w", "1", "--m", "7"]) == 0
    files = list((tmp_path / "out").glob("*.json"))
    assert len(files) == 1
    inst = inst_mod.load(files[0])
    assert (inst.grid.w, inst.m) == (1, 7)


def test_gen_default_grid(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    shutil.copy(SOLOMON / "r201.txt", src)
    paths = cli.cmd_gen(src, [1, 3, 5], [7, 9, 11, 13], tmp_path / "out")
    assert len(paths) == 12 and len({p.name for p in paths}) == 12


def test_gen_empty_dir_warns(tmp_path, caplog):
    (tmp_path / "empty").mkdir()
    with caplog.at_level("WARNING"):
        assert cli.cmd_gen(tmp_path / "empty", [1], [7], tmp_path / "out") == []
    assert "no Solomon files" in caplog.text


def test_gen_skips_bad_file(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    shutil.copy(SOLOMON / "c101.txt", src)
    (src / "bad.txt").write_text("garbage\n")
    assert len(cli.cmd_gen(src, [1], [7], tmp_path / "out")) == 1


def test_solve_is_deterministic(tmp_path, toy_file):
    outs = []
    for k in range(2):
        d = tmp_path / ("runs%d" % k)
        assert cli.main(["solve", str(toy_file), "--repeats", "2", "--seed", "3",
                         "--out", str(d)] + FAST) == 0
        rep = json.loads((d / "rand77" / "report.json").read_text())
        outs.append((rep, (d / "rand77" / "best_solution.txt").read_text()))
        assert (d / "rand77" / "trace_seed3.csv").exists()
        assert (d / "rand77" / "trace_seed4.csv").exists()
    (a, sa), (b, sb) = outs
    strip = lambda rep: [{k: v for k, v in r.items() if k != "time"} for r in rep["runs"]]
    assert strip(a) == strip(b) and sa == sb
    assert a["cfg_hash"] == b["cfg_hash"] and a["max"] >= a["avg"]
    assert [r["seed"] for r in a["runs"]] == [3, 4]


def test_components_flag(tmp_path, toy_file):
    assert cli.main(["solve", str(toy_file), "--repeats", "1", "--components", "LS",
                     "--out", str(tmp_path)] + FAST) == 0
    rep = json.loads((tmp_path / "rand77" / "report.json").read_text())
    assert rep["config"]["components"] == ["LS"]
    assert cli.main(["solve", str(toy_file), "--components", "LS,XX"]) == 1


def test_exit_codes(tmp_path, toy_file, monkeypatch):
    assert cli.main([]) == 1
    assert cli.main(["solve", str(toy_file), "--repeats", "0"]) == 1
    assert cli.main(["solve", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert cli.main(["solve", str(bad)]) == 2
    assert cli.main(["solve", str(SOLOMON / "c101.txt")]) == 1
    monkeypatch.setattr(cli, "cmd_ub", lambda inst, *a, **k: {"UB": 0.0})
    assert cli.main(["solve", str(toy_file), "--repeats", "1", "--ub",
                     "--out", str(tmp_path)] + FAST) == 3


def test_toptw_needs_one_period(tmp_path, toy_file):
    assert cli.main(["solve", str(toy_file), "--toptw"]) == 1
    inst, _ = random_case(78, n=6, m=2, w=1)
    path = tmp_path / "one.json"
    path.write_text(inst_mod.dumps(inst))
    assert cli.main(["solve", str(path), "--toptw", "--repeats", "1",
                     "--out", str(tmp_path / "r")] + FAST) == 0


def test_ub_command(tmp_path, toy_file, capsys):
    lp = tmp_path / "m.lp"
    js = tmp_path / "ub.json"
    assert cli.main(["ub", str(toy_file), "--emit-lp", str(lp), "--solve-small",
                     "--json", str(js)]) == 0
    rep = json.loads(js.read_text())
    assert rep["status"] == "optimal" and rep["method"] == "exact"
    assert lp.read_text().startswith("\\ rand77\nMaximize\n")
    assert cli.main(["ub", str(toy_file), "--no-solve"]) == 0
    assert "UB" not in json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_ub_command_golden_lp(tmp_path):
    inst = inst_mod.generate_mpisp(inst_mod.read_solomon(SOLOMON / "c101.txt"), 1, 1)
    inst = inst_mod.truncate(inst, 3)
    path = tmp_path / "tiny.json"
    path.write_text(inst_mod.dumps(inst))
    lp = tmp_path / "tiny.lp"
    assert cli.main(["ub", str(path), "--emit-lp", str(lp), "--no-solve"]) == 0
    assert lp.read_text() == (GOLDEN / "c101_first3.lp").read_text()


def _fake(tmp_path, name, group, w, m, mx):
    d = tmp_path / name
    d.mkdir(parents=True)
    doc = {"schema": cli.REPORT_SCHEMA, "instance": name, "group": group, "w": w, "m": m,
           "max": mx, "avg": mx - 1, "avg_time": 1.0, "ub": mx, "repeats": 10,
           "cfg_hash": "x"}
    (d / "report.json").write_text(json.dumps(doc))


def test_report_rows_sorted(tmp_path, capsys):
    _fake(tmp_path, "r201_w3_m7", "R2", 3, 7, 1400)
    _fake(tmp_path, "c201_w1_m9", "C2", 1, 9, 1400)
    _fake(tmp_path, "c201_w1_m7", "C2", 1, 7, 1400)
    (tmp_path / "junk").mkdir()
    (tmp_path / "junk" / "report.json").write_text('{"schema": 0}')
    csv_path = tmp_path / "t.csv"
    assert cli.main(["report", str(tmp_path), "--csv", str(csv_path)]) == 0
    rows = csv_path.read_text().splitlines()[1:]
    assert [r.split(",")[1] for r in rows] == ["c201_w1_m7", "c201_w1_m9", "r201_w3_m7"]
    md = capsys.readouterr().out
    assert "### m = 7" in md and "### m = 9" in md and "| C2 |" in md


def test_report_one_row(tmp_path):
    _fake(tmp_path, "c201_w1_m7", "C2", 1, 7, 1400)
    rep = cli.cmd_report(cli.collect_reports([tmp_path]))
    assert len(rep["flat"]) == 1 and len(rep["tables"][7]) == 1


def test_report_without_runs(tmp_path):
    assert cli.main(["report", str(tmp_path)]) == 2

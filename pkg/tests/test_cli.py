import csv
import io
import json
import subprocess
import sys

import pytest

from ergoshift.cli import render, run


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_minmean_writes_json(tmp_path, data_dir, capsys):
    out = tmp_path / "out.json"
    code, _, _ = call(capsys, "minmean", "--system", data_dir / "karp2.json", "--out", out)
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["fbar"] == 1.0 and doc["witness_cycle"] == ["b", "c"]


def test_brute_method_agrees(data_dir, capsys):
    _, karp, _ = call(capsys, "minmean", "--system", data_dir / "karp2.json")
    _, brute, _ = call(capsys, "minmean", "--system", data_dir / "karp2.json", "--method", "brute")
    assert json.loads(karp)["fbar"] == json.loads(brute)["fbar"]


def test_missing_file(capsys):
    code, _, err = call(capsys, "minmean", "--system", "missing.json")
    assert code == 2 and "missing.json" in err


@pytest.mark.parametrize("argv", [["frobnicate"], [], ["minmean"], ["sweep", "--system", "x", "--method", "fast"]])
def test_usage_errors(capsys, argv):
    assert call(capsys, *argv)[0] == 2


def test_bad_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert call(capsys, "minmean", "--system", bad)[0] == 2


def test_mather_and_morris(data_dir, capsys):
    code, out, _ = call(capsys, "mather", "--system", data_dir / "karp2.json")
    doc = json.loads(out)
    assert code == 0 and sorted(doc["edges"]) == ["b", "c"] and "potentials" in doc
    code, out, _ = call(capsys, "morris", "--system", data_dir / "karp2.json")
    assert code == 0 and "b" in out


def test_balance(data_dir, capsys):
    code, out, _ = call(capsys, "balance", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_source.json")
    doc = json.loads(out)
    assert code == 0 and doc["balanced"] is False and doc["max_integral"] - doc["min_integral"] == 1


def test_subaction_csv(data_dir, capsys):
    code, out, _ = call(capsys, "subaction", "--system", data_dir / "shift2.json",
                        "--obs", data_dir / "f_coboundary.json", "--points", data_dir / "point_1_0inf.json")
    assert code == 0
    (row,) = rows(out)
    assert list(row) == ["point_id", "u", "u_plus", "defect", "exactness", "attained_n"]
    assert float(row["u"]) == 1 and float(row["defect"]) == 0 and row["exactness"] == "exact"


def test_corollary(data_dir, capsys):
    code, out, _ = call(capsys, "corollary", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_source.json")
    doc = json.loads(out)
    assert code == 0 and doc["pass"] and doc["C"] == 1.0


def test_residual_subcommands(data_dir, capsys):
    base = ["--system", data_dir / "shift2.json", "--u", data_dir / "u0_source.json", "--points", "random:20"]
    assert call(capsys, "dce-check", *base)[0] == 0
    assert call(capsys, "lemma2", *base)[0] == 0


def test_discounted_values(data_dir, capsys):
    code, out, _ = call(capsys, "discounted", "--system", data_dir / "shift2.json", "--obs",
                        data_dir / "f_coboundary.json", "--eps-list", "0.5", "--format", "json")
    assert code == 0 and json.loads(out)


def test_sweep_balanced_with_plot(tmp_path, data_dir, capsys):
    svg = tmp_path / "sweep.svg"
    code, out, _ = call(capsys, "sweep", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_balanced.json",
                        "--threshold", "5e-3", "--plot", svg)
    errs = [float(r["sup_error"]) for r in rows(out)]
    assert code == 0 and errs[0] > errs[1] > errs[2]
    assert svg.read_text().startswith("<?xml")


def test_sweep_unbalanced_fails(data_dir, capsys):
    code, _, err = call(capsys, "sweep", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_source.json")
    assert code == 1 and "oscillation" in err


def test_sweep_rotation(data_dir, capsys):
    code, out, _ = call(capsys, "sweep", "--system", data_dir / "rotation_golden.json",
                        "--u", data_dir / "rotation_golden.json", "--grid", "100")
    assert code == 0 and float(rows(out)[-1]["sup_error"]) < 1e-2


def test_decompose(data_dir, capsys):
    code, out, _ = call(capsys, "decompose", "--system", data_dir / "shift2.json", "--obs",
                        data_dir / "u0_source.json", "--n", "100,1000", "--max-pre", "1", "--max-cycle", "2")
    assert code == 0 and len(rows(out)) == 2 * 3 * 18


def test_oscillate(tmp_path, data_dir, capsys):
    out, sched = tmp_path / "osc.csv", tmp_path / "schedule.json"
    code, _, _ = call(capsys, "oscillate", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_source.json",
                      "--n1", 9, "--pmax", 3, "--out", out, "--schedule-out", sched)
    table = rows(out.read_text())
    assert code == 0 and [r["p"] for r in table] == ["1", "2", "3"]
    assert abs(float(table[1]["U_value"]) - 1) < 0.05 and abs(float(table[2]["U_value"])) < 0.05
    doc = json.loads(sched.read_text())
    assert doc["N"][:2] == ["9", "8104"] and {"w0", "w1", "eps", "snap_offsets"} <= set(doc)


def test_oscillate_balanced_refused(data_dir, capsys):
    code, _, err = call(capsys, "oscillate", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_balanced.json")
    assert code == 1 and "no oscillation" in err


def test_oscillate_pmax_cap(data_dir, capsys):
    code, _, err = call(capsys, "oscillate", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_source.json",
                        "--pmax", 4)
    assert code == 2 and "representable scale" in err


def test_byte_identical_outputs(tmp_path, data_dir, capsys, monkeypatch):
    argv = ["sweep", "--system", data_dir / "shift2.json", "--u", data_dir / "u0_balanced.json",
            "--points", "random:15", "--seed", 4]
    texts = []
    for threads in ("1", "4"):
        monkeypatch.setenv("ERGOPT_THREADS", threads)
        out, svg = tmp_path / f"o{threads}.csv", tmp_path / f"p{threads}.svg"
        assert call(capsys, *argv, "--out", out, "--plot", svg)[0] == 0
        texts.append((out.read_bytes(), svg.read_bytes()))
    assert texts[0] == texts[1]


def test_render_shortest_floats():
    text = render([{"a": 0.1, "b": None}], "csv", ["a", "b"])
    assert text == "a,b\n0.1,\n"


def test_console_entry_point(data_dir):
    proc = subprocess.run([sys.executable, "-m", "ergoshift.cli", "minmean", "--system", str(data_dir / "karp2.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["fbar"] == 1.0

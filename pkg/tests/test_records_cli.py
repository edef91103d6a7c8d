import json
import math
from pathlib import Path

import numpy as np
import pytest

from toposep import cli
from toposep.records import (COLUMNS, Row, complete_rows, from_json, load_samples, read_csv,
                             save_samples, to_gnuplot, to_json, write_csv)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

ROWS = [
    Row("Ising2D", 4, 0.1, "thooft2d", "default", 0.5190123, 0.01, 2000, "transfer", 123),
    Row("Ising2D", 6, 0.1, "thooft2d", "default", 0.1 + 0.2, 0.0, 1, "exact-enumeration", 7),
    Row("flavored", 4, 0.3, "negativity-moment", "extent=[2, 1]", math.nan, math.nan, 0, "budget-error", 9),
]


def _same(a, b):
    assert len(a) == len(b)
    for x, y in zip(a, b):
        for c in COLUMNS:
            u, v = x.as_dict()[c], y.as_dict()[c]
            assert (isinstance(u, float) and math.isnan(u) and math.isnan(v)) or u == v


def test_csv_and_json_round_trip(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS)
    back = read_csv(tmp_path / "a.csv")
    _same(back, ROWS)
    _same(from_json(to_json(ROWS)), ROWS)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == ",".join(COLUMNS)


def test_comment_lines_are_skipped(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS)
    text = (tmp_path / "a.csv").read_text()
    (tmp_path / "b.csv").write_text("# produced by a test\n" + text)
    _same(read_csv(tmp_path / "b.csv"), ROWS)


def test_truncated_file_keeps_complete_rows(tmp_path):
    write_csv(tmp_path / "a.csv", ROWS)
    text = (tmp_path / "a.csv").read_text()
    (tmp_path / "a.csv").write_text(text[:-7])
    _same(complete_rows(tmp_path / "a.csv"), ROWS[:2])


def test_gnuplot_blocks():
    text = to_gnuplot(ROWS)
    blocks = [b for b in text.split("\n\n")[1:]]
    assert len(blocks) == 3
    assert blocks[0].startswith("# observable=thooft2d model=Ising2D L=4")
    assert all(ln.startswith("#") or len(ln.split()) == 4 for ln in text.splitlines() if ln)


def test_samples_round_trip(tmp_path, rng):
    signs = np.where(rng.random((7, 19)) < 0.3, -1, 1).astype(np.int8)
    save_samples(tmp_path / "s.npz", signs, {"p": 0.1, "L": 3})
    back, meta = load_samples(tmp_path / "s.npz")
    assert np.array_equal(back, signs)
    assert meta["p"] == 0.1 and meta["n_samples"] == 7
    with pytest.raises(ValueError):
        save_samples(tmp_path / "t.npz", signs[0], {})


# --- command line ------------------------------------------------------------

def test_verify_and_fault_injection(tmp_path, capsys):
    assert cli.main(["verify", "--filter", "gibbs", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc and all(d["passed"] for d in doc)
    assert cli.main(["verify", "--filter", "gibbs", "--inject-fault", "e2"]) == 1
    capsys.readouterr()
    # an unknown fault name surfaces as failing checks, never as a silent pass
    assert cli.main(["verify", "--filter", "gibbs", "--inject-fault", "nonsense"]) == 1
    assert "no stabilizer named" in capsys.readouterr().out


def test_thresholds_command(capsys):
    assert cli.main(["thresholds"]) == 0
    out = capsys.readouterr().out
    assert "0.1883607855" in out and "0.1782028735" in out


def test_missing_input_is_a_usage_error(tmp_path, capsys):
    assert cli.main(["export", str(tmp_path / "nope.csv")]) == 2
    assert cli.main(["analyze", str(tmp_path / "nope.csv")]) == 2
    assert cli.main(["scan", "--config", str(tmp_path / "nope.ini")]) == 2
    capsys.readouterr()


def _quick(tmp_path, name, *extra):
    out = tmp_path / name
    assert cli.main(["scan", "--config", str(CONFIGS / "scan_quick_transfer.ini"), "--out", str(out),
                     *extra]) == 0
    return out


def test_scan_export_analyze(tmp_path, capsys):
    out = _quick(tmp_path, "a")
    rows = read_csv(out / "scan.csv")
    assert len(rows) == 6 and {r.method for r in rows} == {"transfer"}
    man = json.loads((out / "manifest.json").read_text())
    assert man["master_seed"] == 11 and "scan.csv" in man["outputs"]
    assert cli.main(["export", str(out / "scan.csv"), "--format", "json", "--out", str(tmp_path / "e")]) == 0
    assert cli.main(["export", str(tmp_path / "e" / "scan.json"), "--format", "csv",
                     "--out", str(tmp_path / "f")]) == 0
    assert (tmp_path / "f" / "scan.csv").read_bytes() == (out / "scan.csv").read_bytes()
    assert cli.main(["export", str(out / "scan.csv"), "--format", "gnuplot-dat", "--out", str(tmp_path / "g")]) == 0
    assert (tmp_path / "g" / "scan.dat").exists()
    capsys.readouterr()
    assert cli.main(["analyze", str(out / "scan.csv"), "--out", str(tmp_path / "h")]) == 0
    doc = json.loads((tmp_path / "h" / "analysis.json").read_text())
    assert doc["inputs-hash"] == man["outputs"]["scan.csv"]
    assert set(doc) >= {"p_star", "err", "found", "pairs"}
    capsys.readouterr()
    assert cli.main(["analyze", str(out / "scan.csv"), "--p-range", "0.06", "0.1"]) == 0
    assert json.loads(capsys.readouterr().out)["p_range"] == [0.06, 0.1]


def test_scan_resume_matches_uninterrupted_run(tmp_path):
    full = _quick(tmp_path, "full")
    part = _quick(tmp_path, "part", "--stop-after", "4")
    assert json.loads((part / "manifest.json").read_text())["partial"]
    text = (part / "scan.csv").read_text()
    (part / "scan.csv").write_text(text[:-5])  # simulate a crash mid-line
    _quick(tmp_path, "part", "--resume")
    assert (part / "scan.csv").read_bytes() == (full / "scan.csv").read_bytes()


def test_resume_rejects_changed_config(tmp_path):
    _quick(tmp_path, "r", "--stop-after", "2")
    assert cli.main(["scan", "--config", str(CONFIGS / "scan_quick_transfer.ini"), "--out",
                     str(tmp_path / "r"), "--resume", "--seed", "12"]) == 2


def test_seed_override_changes_output(tmp_path):
    a = _quick(tmp_path, "s1")
    b = _quick(tmp_path, "s2", "--seed", "12")
    assert (a / "scan.csv").read_bytes() != (b / "scan.csv").read_bytes()


def test_budget_cells_are_recorded(tmp_path):
    ini = tmp_path / "big.ini"
    ini.write_text("[scan]\nobservables = thooft2d anyon-avg-2d\nsizes = 6\np = 0.1\nbackend = exact\n"
                   f"samples = 1\nseed = 1\nout = {tmp_path / 'big'}\n")
    assert cli.main(["scan", "--config", str(ini)]) == 0
    rows = read_csv(tmp_path / "big" / "scan.csv")
    assert [r.observable for r in rows] == ["thooft2d", "anyon-avg-2d/state", "anyon-avg-2d/rbim"]
    assert all(r.method == "budget-error" and math.isnan(r.mean) for r in rows)


def test_config_validation(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[scan]\nsizes = 4\np = 0.7\n")
    assert cli.main(["scan", "--config", str(bad)]) == 2
    cfg = cli.ExperimentConfig.from_parser(cli.load_config(CONFIGS / "scan_thooft2d.ini"))
    assert len(cfg.p_grid) == 11 and cfg.p_grid[-1] == 0.22 and cfg.sizes == (4, 6, 8)
    small = cli.ExperimentConfig.from_parser(cli.load_config(CONFIGS / "scan_small_exact.ini"))
    assert len(cli.cells_of(small)) == len(small.observables) * len(small.sizes) * len(small.p_grid)

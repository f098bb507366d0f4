import os

import pytest

from fdsplit.cli import main
from fdsplit.harness import CSV_HEADER, load_records_csv


def _cfg_file(tmp_path, extra=""):
    path = tmp_path / "tiny.cfg"
    path.write_text(
        "num_antennas = 4\nnum_ul = 2\nnum_dl = 2\nnum_restarts = 2\nseed = 5\n" + extra
    )
    return str(path)


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_single_runs_and_writes_csv(tmp_path, capsys):
    out = tmp_path / "single.csv"
    code = main(["single", "--config", _cfg_file(tmp_path), "--out", str(out),
                 "--quiet", "--no-plot"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4  # header + three methods, one realization
    printed = capsys.readouterr().out
    assert "RLX" in printed and "SPLIT" in printed


def test_cdf_writes_plot(tmp_path):
    out = tmp_path / "cdf.csv"
    code = main(["cdf", "--config", _cfg_file(tmp_path), "--out", str(out),
                 "--iters", "3", "--quiet"])
    assert code == 0
    assert out.exists()
    assert (tmp_path / "cdf.png").exists()


def test_sweep_si_cli(tmp_path):
    out = tmp_path / "si.csv"
    cfgfile = _cfg_file(tmp_path, "si_levels_db = -60,-90\n")
    code = main(["sweep-si", "--config", cfgfile, "--out", str(out),
                 "--iters", "2", "--methods", "rlx,split", "--quiet", "--no-plot"])
    assert code == 0
    records = load_records_csv(str(out))
    assert {r.si_db for r in records} == {-60.0, -90.0}
    assert {r.method for r in records} == {"RLX", "SPLIT"}
    assert len(records) == 2 * 2 * 2


def test_sweep_antennas_cli(tmp_path):
    out = tmp_path / "ant.csv"
    cfgfile = _cfg_file(tmp_path, "antenna_counts = 4,6\n")
    code = main(["sweep-antennas", "--config", cfgfile, "--out", str(out),
                 "--iters", "2", "--quiet", "--no-plot"])
    assert code == 0
    records = load_records_csv(str(out))
    assert {r.m for r in records} == {4, 6}


def test_unknown_config_key_exit_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert main(["cdf", "--config", str(bad), "--quiet"]) == 2


def test_bad_method_exit_2(tmp_path):
    out = tmp_path / "x.csv"
    code = main(["cdf", "--config", _cfg_file(tmp_path), "--out", str(out),
                 "--methods", "rlx,bogus", "--iters", "1", "--quiet"])
    assert code == 2


def test_exh_capacity_exit_3(tmp_path):
    cfgfile = _cfg_file(tmp_path, "antenna_counts = 8,32\n")
    out = tmp_path / "x.csv"
    code = main(["sweep-antennas", "--config", cfgfile, "--out", str(out),
                 "--iters", "1", "--methods", "rlx,exh", "--quiet", "--no-plot"])
    assert code == 3


def test_io_error_exit_4(tmp_path):
    missing_dir = os.path.join(str(tmp_path), "no", "such", "dir", "out.csv")
    code = main(["cdf", "--config", _cfg_file(tmp_path), "--out", missing_dir,
                 "--iters", "1", "--quiet", "--no-plot"])
    assert code == 4


def test_seed_flag_overrides_config(tmp_path):
    out1 = tmp_path / "s1.csv"
    out2 = tmp_path / "s2.csv"
    cfgfile = _cfg_file(tmp_path)
    main(["cdf", "--config", cfgfile, "--out", str(out1), "--iters", "2",
          "--seed", "123", "--quiet", "--no-plot"])
    main(["cdf", "--config", cfgfile, "--out", str(out2), "--iters", "2",
          "--seed", "124", "--quiet", "--no-plot"])
    assert out1.read_bytes() != out2.read_bytes()


def test_timing_flag_breaks_nothing_but_fills_wall_ms(tmp_path):
    out = tmp_path / "t.csv"
    main(["single", "--config", _cfg_file(tmp_path), "--out", str(out),
          "--timing", "--quiet", "--no-plot"])
    records = load_records_csv(str(out))
    assert all(r.wall_ms > 0 for r in records)

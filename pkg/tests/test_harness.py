"""Monte Carlo harness and command line interface."""

import csv
import json
import os
import subprocess
import sys

import numpy as np

import breakboot as bb
from breakboot.cli import main as cli_main
from breakboot.harness import McConfig, TABLE_HEADER, run_cell, run_table
from breakboot.harness import test_dataset as run_dataset_test
from breakboot.rng import STREAM_UV, derive_seed, generator


def tiny_cfg(**kw):
    base = dict(
        scenario="h0m0", error_case="A", T=80, g=0.0, N=4, B=19,
        test="supwald", scheme="wr", master_seed=7, threads=1,
    )
    base.update(kw)
    return McConfig(**base)


def test_single_replication_rates_are_indicator_values():
    cell = run_cell(tiny_cfg(N=1))
    assert all(r in (0.0, 1.0) for r in cell.rates.values())
    again = run_cell(tiny_cfg(N=1))
    assert cell.rates == again.rates


def test_rates_monotone_in_level():
    cell = run_cell(tiny_cfg(N=6, B=39))
    rates = [cell.rates[a] for a in (0.10, 0.05, 0.01)]
    assert rates[0] >= rates[1] >= rates[2]


def test_shared_streams_across_g():
    # innovations are keyed by (master_seed, j) only, so datasets under
    # null and alternative agree before the shift window
    T = 100
    seed = derive_seed(3, 1)
    d0, _ = bb.generate(bb.ScenarioConfig("h0m0", "A", T=T, g=0.0, seed=seed))
    d1, _ = bb.generate(bb.ScenarioConfig("h0m0", "A", T=T, g=-0.2, seed=seed))
    np.testing.assert_array_equal(d0.r, d1.r)
    cut = T // 2
    np.testing.assert_array_equal(d0.y[:cut], d1.y[:cut])
    np.testing.assert_array_equal(d0.x[:cut], d1.x[:cut])
    assert not np.allclose(d0.y[cut:], d1.y[cut:])
    # the raw innovation streams are literally shared
    a = generator(seed, STREAM_UV).standard_normal(8)
    b = generator(seed, STREAM_UV).standard_normal(8)
    np.testing.assert_array_equal(a, b)


def test_run_table_schema(tmp_path):
    out = tmp_path / "table.csv"
    run_table(tiny_cfg(N=2, B=19), [{"g": 0.0}], str(out))
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TABLE_HEADER
    assert len(rows) == 4  # header + one row per alpha
    assert rows[1][0] == "h0m0" and rows[1][4] == "supwald"
    # rates are printed with four decimals
    assert len(rows[1][7].split(".")[1]) == 4


def test_run_table_empty_grid(tmp_path):
    out = tmp_path / "empty.csv"
    run_table(tiny_cfg(), [], str(out))
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows == [TABLE_HEADER]


def test_worker_pool_matches_inline():
    # identical per-replication seeds make the result independent of the
    # worker count
    cfg1 = tiny_cfg(N=4, B=19, threads=1)
    cfg8 = tiny_cfg(N=4, B=19, threads=8)
    cell1 = run_cell(cfg1)
    cell8 = run_cell(cfg8)
    assert cell1.rates == cell8.rates
    assert cell1.rf_break_counts == cell8.rf_break_counts


def test_test_dataset_report(tmp_path):
    data, _ = bb.generate(bb.ScenarioConfig("h0m0", "A", T=100, seed=9))
    spec = bb.scenario_model_spec()
    outcome, report = run_dataset_test(
        spec, data, null_breaks=0, alt_breaks=1, B=39, seed=1, rf_breaks=0
    )
    assert "statistic:" in report and "p-value" in report
    assert "skipped candidates" in report
    assert 0.0 <= outcome.p_value <= 1.0


def test_test_dataset_power_smoke():
    # a large planted shift is detected at the 5% level in a seeded run
    data, _ = bb.generate(bb.ScenarioConfig("h0m1", "A", T=480, g=0.4, seed=4))
    spec = bb.scenario_model_spec()
    outcome, _ = run_dataset_test(
        spec, data, null_breaks=1, alt_breaks=2, B=99, seed=4, rf_breaks=0
    )
    assert outcome.levels_rejected[0.05]


def test_cli_gen_and_test(tmp_path):
    data_path = tmp_path / "d.csv"
    rc = cli_main([
        "gen", "--scenario", "h0m0", "--case", "B", "--T", "90",
        "--seed", "7", "--out", str(data_path),
    ])
    assert rc == 0
    data = bb.Dataset.from_csv(str(data_path))
    assert data.T == 90

    spec_path = tmp_path / "spec.json"
    bb.scenario_model_spec().to_json(str(spec_path))
    rc = cli_main([
        "test", "--data", str(data_path), "--spec", str(spec_path),
        "--null-breaks", "0", "--alt-breaks", "1", "--B", "19",
        "--rf-breaks", "0", "--seed", "1",
    ])
    assert rc == 0


def test_cli_simulate_writes_rows(tmp_path):
    out = tmp_path / "cell.csv"
    rc = cli_main([
        "simulate", "--scenario", "h0m0", "--case", "A", "--T", "80",
        "--N", "2", "--B", "19", "--seed", "3", "--out", str(out),
    ])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TABLE_HEADER and len(rows) == 4


def test_cli_table_with_grid_and_config(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"g": 0.0}, {"T": 90}]))
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"N": 2, "B": 19, "T": 80}))
    out = tmp_path / "table.csv"
    rc = cli_main([
        "table", "--grid", str(grid), "--config", str(cfgfile),
        "--seed", "3", "--out", str(out),
    ])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 7  # header + 2 cells x 3 alphas
    assert rows[1][2] == "80" and rows[4][2] == "90"


def test_cli_flag_overrides_config(tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"T": 90, "N": 2, "B": 19}))
    out = tmp_path / "cell.csv"
    rc = cli_main([
        "simulate", "--config", str(cfgfile), "--T", "80",
        "--seed", "3", "--out", str(out),
    ])
    assert rc == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[1][2] == "80"


def test_cli_config_errors_exit_2(tmp_path):
    assert cli_main(["table", "--out", str(tmp_path / "x.csv")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli_main(["simulate", "--config", str(bad)]) == 2
    missing = tmp_path / "missing.csv"
    assert cli_main([
        "test", "--data", str(missing), "--spec", str(missing),
    ]) == 2


def test_cli_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "breakboot.cli", "gen", "--T", "60", "--out",
         os.devnull],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0

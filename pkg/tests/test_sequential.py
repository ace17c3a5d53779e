"""Sequential reduced-form break-count estimation."""

import pytest

import breakboot as bb
from breakboot.bootstrap import BootstrapConfig
from breakboot.exceptions import ConfigError
from breakboot.rng import derive_seed
from breakboot.sequential import estimate_rf_breaks


def test_max_breaks_zero_rejected():
    data, _ = bb.generate(bb.ScenarioConfig("h1m0", "A", T=80, seed=1))
    spec = bb.scenario_model_spec()
    with pytest.raises(ConfigError):
        estimate_rf_breaks(spec, data, max_breaks=0)


def test_detects_planted_rf_break():
    data, _ = bb.generate(bb.ScenarioConfig("h1m0", "A", T=240, seed=5))
    spec = bb.scenario_model_spec()
    res = estimate_rf_breaks(
        spec, data, max_breaks=2, boot=BootstrapConfig("wr", 99, 5, 1)
    )
    assert res.chosen_breaks == 1
    # break fraction near 1/4
    frac = res.partition.breaks[0] / res.partition.n
    assert abs(frac - 0.25) < 0.08
    # trail: stage 0 rejected, stage 1 not
    assert res.trail[0][2] <= 0.05 < res.trail[1][2]


def test_trail_reproducible_and_partition_consistent():
    data, _ = bb.generate(bb.ScenarioConfig("h1m0", "B", T=120, seed=7))
    spec = bb.scenario_model_spec()
    boot = BootstrapConfig("wf", 49, 11, 3)
    r1 = estimate_rf_breaks(spec, data, max_breaks=2, boot=boot)
    r2 = estimate_rf_breaks(spec, data, max_breaks=2, boot=boot)
    assert r1.trail == r2.trail
    assert r1.chosen_breaks == r2.chosen_breaks
    assert len(r1.partition.breaks) == r1.chosen_breaks
    assert r1.chosen_breaks <= 2


def test_break_free_rf_usually_stops_at_zero():
    # size of the first-stage test: stop at zero breaks about 95% of the
    # time; desk-scale Monte Carlo with a generous band
    spec = bb.scenario_model_spec()
    stops = 0
    reps = 40
    for j in range(1, reps + 1):
        data, _ = bb.generate(
            bb.ScenarioConfig("h0m0", "A", T=120, seed=derive_seed(31, j))
        )
        res = estimate_rf_breaks(
            spec, data, max_breaks=2, boot=BootstrapConfig("wr", 99, 31, j)
        )
        stops += int(res.chosen_breaks == 0)
    assert stops >= 0.80 * reps

import numpy as np
import pytest

from thetatool.exceptions import BudgetExceededError, ConfigError
from thetatool.experiments import (
    GrowthConfig,
    default_tail_grid,
    flowed_heights_n1,
    gnuplot_script,
    load_expectations,
    loglog_slope,
    run_growth,
    run_gscript_probe,
    run_tail,
    stream,
)
from thetatool.cutoff import DyadicIndex
from thetatool.haar import haar_batch
from thetatool.height import HeightParams, height_flowed


def test_streams_are_reproducible_and_disjoint():
    a = stream(7, 1, 2).random(5)
    assert np.array_equal(a, stream(7, 1, 2).random(5))
    assert not np.array_equal(a, stream(7, 1, 3).random(5))
    assert not np.array_equal(a, stream(8, 1, 2).random(5))


def test_loglog_slope_on_power_law():
    M = np.geomspace(2, 4096, 40)
    assert loglog_slope(M, 3 * M**0.5) == pytest.approx(0.5)


def test_growth_config_validation():
    with pytest.raises(BudgetExceededError):
        GrowthConfig(n=2, M_max=4096)
    with pytest.raises(ConfigError):
        GrowthConfig(n=3)
    with pytest.raises(ConfigError):
        GrowthConfig(X_mode="fixed")
    grid = GrowthConfig(M_max=1024).grid()
    assert grid[0] >= 2 and grid[-1] == 1024 and np.all(np.diff(grid) > 0)
    assert set(2.0 ** np.arange(1, 11)) <= set(grid)


def test_rational_control_counts_lattice_points():
    res = run_growth(GrowthConfig(n=1, M_max=512, samples=2, seed=3, X_mode="rational", y_mode="fixed", y_fixed=(0.0,)))
    s = res.samples[0]
    integer = res.grid == np.round(res.grid)
    assert np.allclose(s["absval"][integer], res.grid[integer] - 1)
    assert res.summary["control_slope"] == pytest.approx(1.0, abs=0.01)


def test_growth_is_deterministic_and_crosschecked():
    cfg = GrowthConfig(n=2, M_max=64, samples=3, seed=5)
    a, b = run_growth(cfg), run_growth(cfg)
    assert a.csv() == b.csv()
    assert a.summary["crosscheck_max_error"] < 1e-9
    header = a.csv().splitlines()[0]
    assert header == "seed,sample_id,M,abs_theta,ratio,running_sup,running_sup_ratio"
    assert a.csv().splitlines()[-1].split(",")[1] == "control"


def test_running_sup_dominates_grid_values():
    res = run_growth(GrowthConfig(n=1, M_max=256, samples=4, seed=9))
    for s in res.samples:
        assert np.all(s["running"] >= s["absval"] - 1e-12)
        assert np.all(np.diff(s["running"]) >= 0)


def test_tail_run_and_grid():
    r = run_tail(1, 200_000, seed=4)
    assert r.summary["fitted_exponent"] == pytest.approx(-1.5, abs=0.15)
    assert default_tail_grid(2)[0] == 5 and default_tail_grid(2)[-1] == pytest.approx(60)
    assert r.csv() == run_tail(1, 200_000, seed=4).csv()


def test_vectorized_flowed_heights_match_scalar():
    b = haar_batch(1, 40, np.random.default_rng(21))
    s = np.array([1.0, 1.5, 2.75])
    for jv in (0, 2):
        for mirrored in (False, True):
            fast = flowed_heights_n1(b, s, jv, mirrored, 1.0)
            idx = DyadicIndex((jv,), frozenset({0}) if mirrored else frozenset())
            for k in range(len(b)):
                for i, si in enumerate(s):
                    ref = height_flowed(b.jacobi(k), float(si), idx, HeightParams())
                    assert fast[k, i] == pytest.approx(ref, rel=1e-9)


def test_gscript_probe_complement_decreases():
    r = run_gscript_probe(1, 3000, seed=2, jvecs=[(0,), (1,)])
    for key, comp in r.complement.items():
        assert np.all(np.diff(comp) <= 0) and r.summary["complement_monotone_in_C"][key]
    assert r.summary["reference_exponent"] == -6


def test_gnuplot_and_expectations():
    assert "growth.csv" in gnuplot_script("growth.csv", "growth")
    exp = load_expectations()
    assert exp["version"] == 1
    assert exp["growth"]["1"]["slope_median"] == [0.45, 0.62]

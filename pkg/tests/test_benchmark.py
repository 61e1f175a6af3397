import csv

import pytest

from radar.benchmark import (
    BenchmarkReport,
    ScalingSeries,
    measure,
    ols,
    render_markdown,
    run_rq1,
    run_rq2,
    run_rq3,
    run_rq4,
    rq1_config,
    rq2_sweep,
    write_report,
)
from radar.errors import ConfigError
from radar.generator import GeneratorConfig, generate
from radar.instrument import STEPS, StepTimings
from radar.language import analyze
from radar.simulation import RandomPlan


def test_ols_exact_line():
    fit = ols([1, 2, 3, 4], [3, 5, 7, 9])
    assert fit.slope == pytest.approx(2) and fit.intercept == pytest.approx(1) and fit.r2 == pytest.approx(1)
    assert ols([1, 2], [1, 2]) is None


def test_run_rq4_shares():
    a = StepTimings(seconds={"design_space": 1, "simulation": 8, "shortlist": 1, "voi": 0},
                    bytes={"design_space": 0, "simulation": 3, "shortlist": 0, "voi": 1})
    b = StepTimings(seconds={"design_space": 0, "simulation": 1, "shortlist": 0, "voi": 0},
                    bytes={"design_space": 0, "simulation": 1, "shortlist": 0, "voi": 0})
    out = run_rq4([a, b])
    assert out["time"]["simulation"] == pytest.approx(90.0) and out["memory"]["voi"] == pytest.approx(12.5)
    assert out["count"] == 2
    with pytest.raises(ConfigError):
        run_rq4([])


def test_measure_records_every_step():
    m = analyze(generate(GeneratorConfig(2, 2, 3, 10, False, 0)))
    t = measure(m, RandomPlan(0, 200), repeats=2)
    assert set(t.seconds) == set(STEPS) and t.bytes["simulation"] > 0


def test_series_validation():
    with pytest.raises(ConfigError):
        run_rq1(rq1_config(), 100, 2)
    with pytest.raises(ConfigError):
        run_rq2([], 100)
    with pytest.raises(ConfigError):
        run_rq2(rq2_sweep((3, 2)), 100)
    with pytest.raises(ConfigError):
        run_rq3([3, 2], 100)


def test_small_suite_and_report(tmp_path):
    report = BenchmarkReport("test machine", 1)
    report.series["rq1"] = run_rq1(rq1_config(decisions=2), 50, 3, repeats=1)
    report.series["rq2"] = run_rq2(rq2_sweep((1, 2, 3)), 50, repeats=1)
    report.series["rq3"] = run_rq3([1, 2, 3], 50, decisions=2, repeats=1)
    report.shares = run_rq4(report.series["rq2"].points + report.series["rq3"].points)
    assert report.series["rq1"].xs == [50, 100, 200, 400]
    assert report.series["rq2"].xs == [3, 9, 27]
    write_report(report, tmp_path)
    for name in ("rq1.csv", "rq2.csv", "rq3.csv", "rq4.csv", "report.md"):
        assert (tmp_path / name).exists()
    rows = list(csv.DictReader(open(tmp_path / "rq2.csv")))
    assert [int(r["design_space_size"]) for r in rows] == [3, 9, 27]
    assert {f"{s}_seconds" for s in STEPS} <= set(rows[0]) and "total_bytes" in rows[0]
    md = render_markdown(report)
    assert "R²" in md and "RQ4" in md and "doubling ratios" in md


def test_timeouts_are_recorded():
    series = run_rq2(rq2_sweep((1, 2)), 50, repeats=1, time_budget=0.0)
    assert isinstance(series, ScalingSeries) and series.points == [] and series.timeouts == [3]


def test_full_retention_memory_doubles_with_n():
    m = analyze(generate(rq1_config(0, 4)))
    totals = [measure(m, RandomPlan(0, n), "full", repeats=1).total_bytes for n in (2000, 4000, 8000, 16000)]
    ratios = [b / a for a, b in zip(totals, totals[1:])]
    assert all(1.5 <= q <= 2.5 for q in ratios), ratios


def test_simulation_is_largest_step_on_constant_model():
    m = analyze(generate(GeneratorConfig(1, 0, 1, 0, False, 0)))
    t = measure(m, RandomPlan(0, 1000), repeats=5)
    assert max(t.seconds, key=t.seconds.get) == "simulation"

"""Scaling experiments: run time and memory per analysis step.

Each point is measured as one warm-up run (discarded for timing, used for
allocator-based memory accounting under tracemalloc) followed by timed
runs whose per-step median is reported.
"""

from __future__ import annotations

import csv
import datetime
import os
import platform
import statistics
import time
import tracemalloc
from dataclasses import dataclass, field
from typing import Optional

from scipy import stats

from radar.analysis import AnalysisConfig, run_analysis
from radar.designspace import size_without_enumeration
from radar.errors import BenchmarkTimeout, ConfigError
from radar.generator import GeneratorConfig, generate
from radar.instrument import STEPS, StepRecorder, StepTimings
from radar.language.semantics import analyze
from radar.simulation import backend as _backend
from radar.simulation.rng import RandomPlan

DEFAULT_TIME_BUDGET = 3600.0
MIN_VARIABLES = 100


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float


def ols(xs, ys) -> Optional[Fit]:
    """Least-squares line through (x, y); None with fewer than 3 points."""
    if len(xs) < 3:
        return None
    res = stats.linregress(xs, ys)
    return Fit(float(res.slope), float(res.intercept), float(res.rvalue**2))


@dataclass
class Point:
    x: float
    timings: StepTimings
    config: GeneratorConfig
    N: int
    size: int
    mode: str


@dataclass
class ScalingSeries:
    variable: str  # "N" | "designSpaceSize" | "objectives"
    points: list = field(default_factory=list)
    timeouts: list = field(default_factory=list)  # x values that exceeded the budget

    @property
    def xs(self):
        return [p.x for p in self.points]

    @property
    def total_seconds(self):
        return [p.timings.total_seconds for p in self.points]

    @property
    def total_bytes(self):
        return [p.timings.total_bytes for p in self.points]

    @property
    def time_fit(self):
        return ols(self.xs, self.total_seconds)

    @property
    def memory_fit(self):
        return ols(self.xs, self.total_bytes)

    def ratios(self):
        """Total-time ratio between successive points."""
        t = self.total_seconds
        return [b / a if a > 0 else float("inf") for a, b in zip(t, t[1:])]


@dataclass
class BenchmarkReport:
    machine: str
    workers: int
    series: dict = field(default_factory=dict)  # "rq1".."rq3" -> ScalingSeries
    shares: Optional[dict] = None  # rq4 table


def machine_descriptor() -> str:
    return (f"{platform.machine()} {platform.processor() or 'cpu'}, {os.cpu_count()} logical CPUs, "
            f"{platform.system()} {platform.release()}, Python {platform.python_version()}, "
            f"kernel backend {_backend.BACKEND}")


def measure(model, plan, mode="full", *, repeats=3, warmup=True, workers=1,
            time_budget=DEFAULT_TIME_BUDGET, bin_count=None) -> StepTimings:
    """Median per-step time over ``repeats`` runs; memory from the warm-up."""
    started = time.monotonic()

    def config():
        left = None if time_budget is None else time_budget - (time.monotonic() - started)
        if left is not None and left <= 0:
            raise BenchmarkTimeout("benchmark point exceeded its wall-clock budget")
        return AnalysisConfig(mode=mode, workers=workers, bin_count=bin_count, time_budget=left)

    memory = StepTimings()
    if warmup:
        was_tracing = tracemalloc.is_tracing()
        if not was_tracing:
            tracemalloc.start()
        try:
            recorder = StepRecorder()
            run_analysis(model, plan, config(), recorder)
            memory = recorder.timings
        finally:
            if not was_tracing:
                tracemalloc.stop()
    runs = []
    for _ in range(max(1, repeats)):
        recorder = StepRecorder()
        run_analysis(model, plan, config(), recorder)
        runs.append(recorder.timings)
    out = StepTimings()
    for step in STEPS:
        out.seconds[step] = statistics.median(r.seconds[step] for r in runs)
        out.bytes[step] = memory.bytes[step]
        out.rss[step] = max([memory.rss[step]] + [r.rss[step] for r in runs])
    return out


def _model(config: GeneratorConfig):
    return analyze(generate(config))


def _point(series, x, config, N, seed, mode, **kw):
    model = _model(config)
    size = size_without_enumeration(model)
    timings = measure(model, RandomPlan(seed, N), mode, **kw)
    series.points.append(Point(x, timings, config, N, size, mode))


def rq1_config(seed=0, decisions=10, options=3):
    return GeneratorConfig(2, decisions, options, MIN_VARIABLES, False, seed)


def run_rq1(base_config: GeneratorConfig, N_start: int, doublings: int, seed: int = 0,
            mode="streaming", **kw) -> ScalingSeries:
    """Fixed model, N doubled ``doublings`` times from ``N_start``."""
    if doublings < 3:
        raise ConfigError("run_rq1 needs at least 3 doublings")
    series = ScalingSeries("N")
    for k in range(doublings + 1):
        N = N_start * 2**k
        try:
            _point(series, N, base_config, N, seed, mode, **kw)
        except BenchmarkTimeout:
            series.timeouts.append(N)
    return series


def rq2_sweep(exponents=(2, 4, 6, 8, 10), options=3, seed=0):
    return [GeneratorConfig(2, d, options, MIN_VARIABLES, False, seed) for d in exponents]


def run_rq2(sweep, N: int, seed: int = 0, mode="full", **kw) -> ScalingSeries:
    """One point per model of strictly increasing |DS|; stops at the first timeout."""
    if not sweep:
        raise ConfigError("empty design-space sweep")
    models = [_model(c) for c in sweep]
    sizes = [size_without_enumeration(m) for m in models]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError("sweep must have strictly increasing design-space sizes")
    series = ScalingSeries("designSpaceSize")
    for config, size in zip(sweep, sizes):
        try:
            _point(series, size, config, N, seed, mode, **kw)
        except BenchmarkTimeout:
            series.timeouts.append(size)
            break
    return series


def run_rq3(objective_counts, N: int, seed: int = 0, decisions=6, options=3, mode="full",
            **kw) -> ScalingSeries:
    counts = list(objective_counts)
    if not counts:
        raise ConfigError("no objective counts given")
    if any(b <= a for a, b in zip(counts, counts[1:])):
        raise ConfigError("objective counts must be ascending")
    series = ScalingSeries("objectives")
    for k in counts:
        config = GeneratorConfig(k, decisions, options, MIN_VARIABLES, False, seed)
        try:
            _point(series, k, config, N, seed, mode, **kw)
        except BenchmarkTimeout:
            series.timeouts.append(k)
    return series


def run_rq4(measurements) -> dict:
    """Mean per-step time and memory percentages across measurements."""
    measurements = [m.timings if isinstance(m, Point) else m for m in measurements]
    if not measurements:
        raise ConfigError("run_rq4 needs at least one measurement")
    time_rows = [m.time_shares() for m in measurements]
    mem_rows = [m.memory_shares() for m in measurements]
    return {
        "time": {s: statistics.fmean(r[s] for r in time_rows) for s in STEPS},
        "memory": {s: statistics.fmean(r[s] for r in mem_rows) for s in STEPS},
        "count": len(measurements),
    }


SCALES = {
    "desk": dict(rq1_N=1000, rq1_doublings=6, rq1_decisions=10, rq2_exponents=(2, 4, 6, 8, 10),
                 rq2_N=1000, rq3_counts=(2, 3, 4, 5), rq3_decisions=6, rq3_N=1000, repeats=3),
    "paper": dict(rq1_N=10_000, rq1_doublings=9, rq1_decisions=10,
                  rq2_exponents=(2, 4, 6, 8, 10, 11, 12, 13, 14), rq2_N=10_000,
                  rq3_counts=(2, 3, 4, 5), rq3_decisions=10, rq3_N=10_000, repeats=1),
}


def run_suite(rqs=("1", "2", "3", "4"), scale="desk", seed=0, workers=1,
              time_budget=DEFAULT_TIME_BUDGET, repeats=None) -> BenchmarkReport:
    if scale not in SCALES:
        raise ConfigError(f"unknown scale {scale!r}")
    p = SCALES[scale]
    kw = dict(workers=workers, time_budget=time_budget,
              repeats=p["repeats"] if repeats is None else repeats)
    report = BenchmarkReport(machine_descriptor(), workers)
    rqs = set(rqs)
    if "1" in rqs:
        report.series["rq1"] = run_rq1(rq1_config(seed, p["rq1_decisions"]), p["rq1_N"],
                                       p["rq1_doublings"], seed, **kw)
    if rqs & {"2", "4"}:
        report.series["rq2"] = run_rq2(rq2_sweep(p["rq2_exponents"], seed=seed), p["rq2_N"], seed, **kw)
    if rqs & {"3", "4"}:
        report.series["rq3"] = run_rq3(p["rq3_counts"], p["rq3_N"], seed, p["rq3_decisions"], **kw)
    if "4" in rqs:
        points = report.series["rq2"].points + report.series["rq3"].points
        report.shares = run_rq4(points)
    return report


def _row(series, p: Point):
    row = {
        series.variable: p.x, "objectives": p.config.objectives, "decisions": p.config.decisions,
        "options": p.config.options_per_decision, "min_variables": p.config.min_variables,
        "dependencies": int(p.config.with_dependencies), "seed": p.config.seed, "N": p.N,
        "design_space_size": p.size, "mode": p.mode,
    }
    for s in STEPS:
        row[f"{s}_seconds"] = f"{p.timings.seconds[s]:.6g}"
    for s in STEPS:
        row[f"{s}_bytes"] = p.timings.bytes[s]
    for s in STEPS:
        row[f"{s}_rss_bytes"] = p.timings.rss[s]
    row["total_seconds"] = f"{p.timings.total_seconds:.6g}"
    row["total_bytes"] = p.timings.total_bytes
    return row


def write_series_csv(series: ScalingSeries, path):
    rows = [_row(series, p) for p in series.points]
    with open(path, "w", newline="") as fh:
        if not rows:
            fh.write(f"{series.variable}\n")
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def write_shares_csv(shares, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "time_percent", "memory_percent"])
        for s in STEPS:
            writer.writerow([s, f"{shares['time'][s]:.4f}", f"{shares['memory'][s]:.4f}"])


def _fit_text(fit):
    if fit is None:
        return "n/a (fewer than 3 points)"
    return f"slope {fit.slope:.6g}, intercept {fit.intercept:.6g}, R² {fit.r2:.4f}"


def render_markdown(report: BenchmarkReport) -> str:
    now = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    lines = ["# Benchmark report", "", f"- generated: {now}", f"- machine: {report.machine}",
             f"- workers: {report.workers}", ""]
    titles = {"rq1": "RQ1: time and memory vs N", "rq2": "RQ2: time and memory vs design-space size",
              "rq3": "RQ3: time and memory vs number of objectives"}
    for key, series in report.series.items():
        lines += [f"## {titles[key]}", "", f"| {series.variable} | total s | total bytes |", "|---:|---:|---:|"]
        for p in series.points:
            lines.append(f"| {p.x:g} | {p.timings.total_seconds:.4f} | {p.timings.total_bytes} |")
        lines += ["", f"- time fit: {_fit_text(series.time_fit)}",
                  f"- memory fit: {_fit_text(series.memory_fit)}"]
        if series.variable == "N" and len(series.points) > 1:
            lines.append("- doubling ratios: " + ", ".join(f"{r:.3f}" for r in series.ratios()))
        if series.timeouts:
            lines.append(f"- timed out at: {', '.join(str(x) for x in series.timeouts)}")
        lines.append("")
    if report.shares:
        lines += ["## RQ4: average share per analysis step", "",
                  f"Mean over {report.shares['count']} models.", "",
                  "| step | time % | memory % |", "|---|---:|---:|"]
        for s in STEPS:
            lines.append(f"| {s} | {report.shares['time'][s]:.2f} | {report.shares['memory'][s]:.2f} |")
        lines.append("")
    return "\n".join(lines)


def write_report(report: BenchmarkReport, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for key, series in report.series.items():
        write_series_csv(series, os.path.join(out_dir, f"{key}.csv"))
    if report.shares:
        write_shares_csv(report.shares, os.path.join(out_dir, "rq4.csv"))
    with open(os.path.join(out_dir, "report.md"), "w") as fh:
        fh.write(render_markdown(report))

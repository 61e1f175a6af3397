"""Acceptance criteria 1-11; each test prints one PASS/FAIL line."""

import math
import random
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, model_of
from radar.analysis import AnalysisConfig, evppi_many, evtpi, pareto_shortlist, run_analysis
from radar.benchmark import SCALES, run_rq1, run_rq2, run_rq3, run_rq4, rq1_config, rq2_sweep
from radar.cli import main
from radar.designspace import enumerate_design_space, size_without_enumeration
from radar.errors import NumericError
from radar.generator import MAX_OBJECTIVES, GeneratorConfig, generate
from radar.instrument import STEPS
from radar.language import VarDef, analyze, parse, pretty_print, tokenize
from radar.language.nodes import DistributionCall, ModelAst, Number
from radar.simulation import RandomPlan, nb_matrix, simulate
from radar.simulation.engine import FULL, STREAMING
from radar.simulation.rng import param_id, sample_vector

DESK = SCALES["desk"]


def verdict(n, title, ok, detail, elapsed=None, limit=None):
    if limit is not None:
        ok = ok and elapsed < limit
        detail += f"; {elapsed:.2f}s (limit {limit:g}s)"
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_design_space_exactness():
    m = analyze(generate(GeneratorConfig(1, 10, 3, 0, False, 0)))
    t = time.perf_counter()
    ds = enumerate_design_space(m)
    elapsed = time.perf_counter() - t
    distinct = len({r.tobytes() for r in ds.choices})
    ok = ds.size == 59_049 == distinct == size_without_enumeration(m)
    verdict(1, "10 decisions x 3 options enumerate exactly 59,049 solutions", ok,
            f"|DS| = {ds.size}, distinct = {distinct}", elapsed, 1.0)


def brute_evtpi(v):
    # the textbook formula, summed in a different order with exact fsum
    n = v.shape[0]
    return math.fsum(max(row) for row in v.tolist()) / n - max(math.fsum(col) / n for col in v.T.tolist())


def test_criterion_02_evtpi_formula():
    r = np.random.default_rng(2)
    t = time.perf_counter()
    worst, negatives, single_nonzero = 0.0, 0, 0
    for k in range(1000):
        n, m = int(r.integers(1, 501)), int(r.integers(1, 9))
        v = r.normal(r.uniform(-50, 50), r.uniform(0.1, 20), size=(n, m))
        if k % 10 == 0:
            v = np.round(v)  # ties
        e = evtpi(v)
        worst = max(worst, abs(e - brute_evtpi(v)))
        negatives += e < 0
        if m == 1:
            single_nonzero += e != 0.0
    elapsed = time.perf_counter() - t
    ok = worst <= 1e-12 and negatives == 0 and single_nonzero == 0
    verdict(2, "EVTPI equals brute-force formula on 1,000 NB matrices", ok,
            f"max |diff| = {worst:.2e}, negative = {negatives}, M=1 nonzero = {single_nonzero}", elapsed, 10.0)


def brute_front(means, dirs):
    signed = means * np.where(np.array(dirs) == "Max", 1.0, -1.0)
    ge = (signed[:, None, :] >= signed[None, :, :]).all(axis=2)
    gt = (signed[:, None, :] > signed[None, :, :]).any(axis=2)
    dominated = (ge & gt).any(axis=0)  # [j, i]: j dominates i
    return tuple(int(i) for i in np.flatnonzero(~dominated))


def test_criterion_03_pareto_oracle():
    r = np.random.default_rng(3)
    t = time.perf_counter()
    mismatches = 0
    for k in range(1000):
        n, d = int(r.integers(1, 201)), int(r.integers(1, 5))
        means = r.normal(size=(n, d))
        if k % 3 == 0:
            means = r.integers(0, 4, size=(n, d)).astype(float)  # many ties and duplicates
        dirs = list(r.choice(["Max", "Min"], size=d))
        mismatches += pareto_shortlist(means, dirs).indices != brute_front(means, dirs)
    elapsed = time.perf_counter() - t
    verdict(3, "Pareto shortlist equals all-pairs dominance filter on 1,000 cases", mismatches == 0,
            f"mismatches = {mismatches}", elapsed, 30.0)


# "up" earns P + Q at cost 1 + U/100, "flat" earns Q at cost 0: incomparable, so |S| = 2
VOI_MODEL = ('Model Voi; Objective Max Gain = EV(X); Objective Min Cost = EV(C); '
             'P = normal(0.1, 1); Q = uniform(0, 1); U = normal(5, 2); '
             'S = decision("D"){"up": 1; "flat": 0;}; X = S * P + Q; C = S + S * U * 0.01;')


def nested_evppi(model, name, outer, inner, seed):
    """Two-level Monte Carlo: fix the parameter, re-simulate everything else."""
    base = simulate(model, enumerate_design_space(model), RandomPlan(seed, inner)).means[:, 0]
    xs = sample_vector(model.parameter_spec(name), seed + 1, param_id(name), np.arange(outer))
    best = []
    for x in xs:
        stmts = tuple(VarDef(s.name, DistributionCall("deterministic", (Number(float(x)),)))
                      if isinstance(s, VarDef) and s.name == name else s for s in model.ast.statements)
        fixed = analyze(ModelAst(model.ast.name, stmts))
        best.append(simulate(fixed, enumerate_design_space(fixed), RandomPlan(seed, inner)).means[:, 0].max())
    return float(np.mean(best) - base.max())


def test_criterion_04_evppi_validity():
    t = time.perf_counter()
    r = np.random.default_rng(4)
    a_ok = b_worst = 0
    for _ in range(200):
        n, m = int(r.integers(2, 400)), int(r.integers(1, 6))
        v = r.normal(size=(n, m))
        x = r.permutation(n).astype(float) + r.random()
        a_ok += evppi_many(v, x, 1)[0] == 0.0
        b_worst = max(b_worst, abs(evppi_many(v, x, n)[0] - evtpi(v)))
    model = model_of(VOI_MODEL)
    res = run_analysis(model, RandomPlan(11, 10_000), AnalysisConfig(bin_count=100, mode=FULL))
    rep = res.voi[0]
    rel_c = abs(rep.evppi["P"] - rep.evtpi) / rep.evtpi
    ratio_d = rep.evppi["U"] / rep.evtpi
    oracle_u = nested_evppi(model, "U", 1000, 4000, 21)
    oracle_p = nested_evppi(model, "P", 1000, 4000, 21)
    elapsed = time.perf_counter() - t
    ok = (a_ok == 200 and b_worst <= 1e-12 and rep.S == 2 and rel_c <= 0.10 and ratio_d <= 0.05
          and abs(oracle_u) <= 1e-12)
    verdict(4, "EVPPI binning estimator", ok,
            f"(a) bin=1 zero in {a_ok}/200; (b) max |EVPPI-EVTPI| = {b_worst:.1e}; "
            f"(c) EVTPI = {rep.evtpi:.4f}, EVPPI(P) = {rep.evppi['P']:.4f}, rel = {rel_c:.3f} "
            f"(nested oracle {oracle_p:.4f}); (d) EVPPI(U)/EVTPI = {ratio_d:.4f}, nested oracle {oracle_u:.1e}",
            elapsed, 60.0)


def test_criterion_05_determinism(tmp_path):
    t = time.perf_counter()
    path = tmp_path / "m.rdr"
    assert main(["generate", str(path), "--objectives", "2", "--decisions", "5", "--options", "3",
                 "--min-vars", "60", "--deps", "--seed", "5"]) == 0
    outputs = []
    for workers in ("1", "4"):
        for rep in range(2):
            d = tmp_path / f"w{workers}_{rep}"
            assert main(["analyze", str(path), "--N", "3000", "--seed", "99", "--workers", workers,
                         "--csv-dir", str(d), "--voi-objective", "Obj1", "--voi-objective", "Obj2"]) == 0
            outputs.append(tuple((d / f).read_bytes() for f in ("front.csv", "voi.csv", "means.csv")))
    csv_same = all(o == outputs[0] for o in outputs)

    model = analyze(generate(GeneratorConfig(3, 5, 3, 60, True, 6)))
    ds = enumerate_design_space(model)
    plan = RandomPlan(123, 4000)
    full = simulate(model, ds, plan, FULL, workers=4)
    stream = simulate(model, ds, plan, STREAMING, workers=1)
    means_same = np.array_equal(full.means, stream.means)
    shortlist = pareto_shortlist(full.means, [o.direction for o in model.objectives]).indices
    nb_same = all(np.array_equal(nb_matrix(model, shortlist, plan, o.name, result=full).values,
                                 nb_matrix(model, shortlist, plan, o.name, result=stream, workers=4).values)
                  for o in model.objectives)
    elapsed = time.perf_counter() - t
    verdict(5, "byte-identical CSVs at 1 and 4 workers; streaming == full", csv_same and means_same and nb_same,
            f"CSVs identical = {csv_same}, means identical = {means_same}, NB identical = {nb_same}",
            elapsed, 60.0)


@pytest.mark.slow
def test_criterion_06_rq1_linearity():
    t = time.perf_counter()
    series = run_rq1(rq1_config(0, DESK["rq1_decisions"]), DESK["rq1_N"], DESK["rq1_doublings"], 0,
                     repeats=DESK["repeats"])
    elapsed = time.perf_counter() - t
    fit = series.time_fit
    ratios = series.ratios()
    ok = (not series.timeouts and len(series.points) == 7 and fit.r2 >= 0.95
          and all(1.6 <= q <= 2.4 for q in ratios))
    verdict(6, "RQ1 total time linear in N", ok,
            f"R² = {fit.r2:.4f}, doubling ratios = [{', '.join(f'{q:.2f}' for q in ratios)}]", elapsed, 600.0)


@pytest.fixture(scope="module")
def rq23():
    t = time.perf_counter()
    rq2 = run_rq2(rq2_sweep(DESK["rq2_exponents"]), DESK["rq2_N"], 0, repeats=DESK["repeats"])
    t2 = time.perf_counter() - t
    t = time.perf_counter()
    rq3 = run_rq3(DESK["rq3_counts"], DESK["rq3_N"], 0, decisions=DESK["rq3_decisions"], repeats=DESK["repeats"])
    t3 = time.perf_counter() - t
    return rq2, t2, rq3, t3


@pytest.mark.slow
def test_criterion_07_rq2_linearity(rq23):
    rq2, elapsed, _, _ = rq23
    fit = rq2.time_fit
    ok = rq2.xs == [9, 81, 729, 6561, 59049] and fit is not None and fit.r2 >= 0.95
    verdict(7, "RQ2 total time linear in |DS|", ok, f"|DS| = {rq2.xs}, R² = {fit.r2:.4f}", elapsed, 900.0)


@pytest.mark.slow
def test_criterion_08_rq3_linearity(rq23):
    _, _, rq3, elapsed = rq23
    fit = rq3.time_fit
    ok = rq3.xs == [2, 3, 4, 5] and all(p.size == 729 for p in rq3.points) and fit.r2 >= 0.9
    verdict(8, "RQ3 total time linear in |Obj|", ok, f"R² = {fit.r2:.4f}", elapsed, 300.0)


@pytest.mark.slow
def test_criterion_09_rq4_shares(rq23):
    rq2, _, rq3, _ = rq23
    shares = run_rq4(rq2.points + rq3.points)
    tm, mem = shares["time"], shares["memory"]
    full_mode = all(p.mode == FULL for p in rq2.points + rq3.points)
    ok = (tm["simulation"] >= 90 and all(tm[s] <= 5 for s in STEPS if s != "simulation")
          and full_mode and mem["simulation"] >= 75)
    detail = ("time % " + ", ".join(f"{s} {tm[s]:.2f}" for s in STEPS)
              + "; memory % " + ", ".join(f"{s} {mem[s]:.2f}" for s in STEPS))
    verdict(9, "simulation dominates time and memory", ok, detail)


def test_criterion_10_generator_soundness():
    r = random.Random(10)
    t = time.perf_counter()
    failures = []
    for k in range(1000):
        while True:
            cfg = GeneratorConfig(r.randint(1, MAX_OBJECTIVES), r.randint(0, 8), r.randint(1, 6),
                                  r.randint(0, 300), r.random() < 0.5, r.getrandbits(63))
            if cfg.expected_size <= 20_000:
                break
        try:
            m = analyze(generate(cfg))
            n_vars = sum(isinstance(s, VarDef) for s in m.ast.statements)
            counts = (len(m.objectives) == cfg.objectives and len(m.decisions) == cfg.decisions
                      and all(len(d.options) == cfg.options_per_decision for d in m.decisions)
                      and n_vars >= cfg.min_variables)
            size = size_without_enumeration(m)
            if cfg.with_dependencies and cfg.decisions >= 2:
                counts = counts and len(m.dependency_edges) >= 1
            else:
                counts = counts and not m.dependency_edges and size == cfg.expected_size
            res = simulate(m, enumerate_design_space(m), RandomPlan(k, 10))
            counts = counts and res.means.shape == (size, cfg.objectives) and np.isfinite(res.means).all()
            if not counts:
                failures.append((cfg, "structure"))
        except NumericError as exc:
            failures.append((cfg, f"NumericError {exc}"))
    elapsed = time.perf_counter() - t
    verdict(10, "1,000 generated models analyze, match counts and simulate", not failures,
            f"failures = {len(failures)}" + (f", first = {failures[0]}" if failures else ""), elapsed, 120.0)


def test_criterion_11_round_trip():
    r = random.Random(11)
    t = time.perf_counter()
    bad = 0
    for _ in range(1000):
        cfg = GeneratorConfig(r.randint(1, 6), r.randint(0, 12), r.randint(1, 8), r.randint(0, 150),
                              r.random() < 0.5, r.getrandbits(63))
        ast = generate(cfg)
        text = pretty_print(ast)
        again = parse(tokenize(text))
        bad += again != ast or pretty_print(again) != text
    elapsed = time.perf_counter() - t
    verdict(11, "parse(tokenize(pretty_print(g))) == g for 1,000 generated models", bad == 0,
            f"mismatches = {bad}", elapsed, 60.0)

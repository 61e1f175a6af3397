"""Time the compiled kernel against the NumPy fallback and check they agree bitwise.

    python3 benchmarks/compare_backends.py [--N 2000] [--decisions 6] [--repeats 5]
"""

import argparse
import statistics
import time

import numpy as np

from radar.analysis import evppi_many, evtpi, pareto_shortlist
from radar.designspace import enumerate_design_space
from radar.generator import GeneratorConfig, generate
from radar.language import analyze
from radar.simulation import RandomPlan, simulate
from radar.simulation import backend as _backend
from radar.simulation.engine import NbMatrix


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), statistics.median(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=2000)
    ap.add_argument("--decisions", type=int, default=6)
    ap.add_argument("--objectives", type=int, default=2)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    try:
        _backend.get("cython")
    except ImportError:
        print("compiled kernel not built; run `python3 setup.py build_ext --inplace`")
        return 1

    model = analyze(generate(GeneratorConfig(args.objectives, args.decisions, 3, 100, False, args.seed)))
    ds = enumerate_design_space(model)
    plan = RandomPlan(args.seed, args.N)
    print(f"model: |DS| = {ds.size}, objectives = {args.objectives}, m = {model.node_count}, N = {args.N}")

    results = {}
    rows = []
    for name in ("cython", "python"):
        t_min, t_med, sim = best_of(lambda: simulate(model, ds, plan, "full", backend=name), args.repeats)
        dirs = [o.direction for o in model.objectives]
        p_min, p_med, front = best_of(lambda: pareto_shortlist(sim.means, dirs, name), args.repeats)
        nb = NbMatrix(sim.draws[:, 0, :], front.indices, front.indices, model.objectives[0].name)
        xs = np.stack([sim.engine.parameter_draws(p) for p in model.parameters])
        v_min, v_med, voi = best_of(lambda: (evtpi(nb, name), evppi_many(nb, xs, backend=name)),
                                    args.repeats)
        results[name] = (sim, front, voi)
        rows.append((name, t_min, t_med, p_min, v_min))

    print(f"{'backend':8} {'simulate s':>12} {'median s':>10} {'ns/run':>8} {'pareto s':>10} {'voi s':>10}")
    for name, t_min, t_med, p_min, v_min in rows:
        per = t_min / (ds.size * args.N) * 1e9
        print(f"{name:8} {t_min:12.4f} {t_med:10.4f} {per:8.2f} {p_min:10.5f} {v_min:10.5f}")
    print(f"speed-up (simulate): {rows[1][1] / rows[0][1]:.1f}x")

    (sc, fc, vc), (sp, fp, vp) = results["cython"], results["python"]
    same = (np.array_equal(sc.means, sp.means) and np.array_equal(sc.draws, sp.draws)
            and fc == fp and vc[0] == vp[0] and np.array_equal(vc[1], vp[1]))
    print(f"bitwise identical: {same}")
    return 0 if same else 2


if __name__ == "__main__":
    raise SystemExit(main())

import random

import numpy as np
import pytest

from radar.designspace import Solution, enumerate_design_space
from radar.errors import AnalysisError, CapacityError, NumericError
from radar.generator import GeneratorConfig, generate
from radar.language import analyze
from radar.simulation import RandomPlan, evaluate_run, nb_matrix, simulate
from radar.simulation.engine import FULL, STREAMING, Engine, NbMatrix, fold, new_accumulator, resolve_mode

from conftest import model_of


def run_all(model, ds, plan):
    """Oracle: every (solution, objective, run) through the AST evaluator."""
    names = [o.name for o in model.objectives]
    out = np.empty((ds.size, len(names), plan.N))
    for s in range(ds.size):
        sol = ds.solution(s)
        for i in range(plan.N):
            values = evaluate_run(model, sol, plan, i)
            out[s, :, i] = [values[n] for n in names]
    return out


def test_constant_model():
    m = model_of("Model M; Objective Max O = EV(X); X = deterministic(2) + 3;")
    assert evaluate_run(m, Solution({}), RandomPlan(0, 4), 2) == {"O": 5.0}
    res = simulate(m, enumerate_design_space(m), RandomPlan(0, 37), FULL)
    assert res.means[0, 0] == 5.0 and (res.draws == 5.0).all()


def test_branch_selection():
    m = model_of('Model M; Objective Max O = EV(X); X = decision("D"){"a": 1; "b": 2;};')
    assert evaluate_run(m, Solution({"D": "b"}), RandomPlan(0, 1), 0) == {"O": 2.0}
    assert simulate(m, enumerate_design_space(m), RandomPlan(0, 3)).means.tolist() == [[1.0], [2.0]]


def test_memoized_variable():
    m = model_of("Model M; Objective Max O = EV(X); Y = normal(0, 1); X = Y - Y;")
    assert evaluate_run(m, Solution({}), RandomPlan(9, 5), 4) == {"O": 0.0}
    res = simulate(m, enumerate_design_space(m), RandomPlan(9, 100), FULL)
    assert (res.draws == 0.0).all()


def test_inline_distributions_are_distinct_quantities():
    m = model_of("Model M; Objective Max O = EV(X); X = uniform(0, 1) - uniform(0, 1);")
    res = simulate(m, enumerate_design_space(m), RandomPlan(1, 200), FULL)
    assert np.std(res.draws) > 0.1


@pytest.mark.parametrize("seed", range(12))
def test_kernel_matches_ast_oracle(seed, backend):
    r = random.Random(seed)
    cfg = GeneratorConfig(r.randrange(1, 4), r.randrange(0, 4), r.randrange(1, 4), r.randrange(0, 30),
                          r.random() < 0.5, seed)
    m = analyze(generate(cfg))
    ds = enumerate_design_space(m)
    plan = RandomPlan(seed * 7 + 1, 23)
    res = simulate(m, ds, plan, FULL, backend=backend)
    oracle = run_all(m, ds, plan)
    assert np.array_equal(res.draws, oracle)
    # means: same lane-folded summation, so compare to a float64 mean tightly
    assert np.allclose(res.means, oracle.mean(axis=2), rtol=1e-13, atol=1e-12)


def test_operators_match_oracle(backend):
    src = ("Model M; Objective Max O = EV(X); Objective Min Q = EV(Z); "
           "P = uniform(1, 2); R = normal(0, 1); "
           "X = (P ^ 2.5 - -R) / (P * 3) + 2 ^ -P; Z = -(P - R) ^ 2 + decision(\"D\"){\"a\": P / R; \"b\": 1;};")
    m = model_of(src)
    ds = enumerate_design_space(m)
    plan = RandomPlan(3, 64)
    assert np.array_equal(simulate(m, ds, plan, FULL, backend=backend).draws, run_all(m, ds, plan))


def test_backends_bitwise_identical():
    m = analyze(generate(GeneratorConfig(3, 4, 3, 50, True, 8)))
    ds = enumerate_design_space(m)
    plan = RandomPlan(5, 1537)
    a = simulate(m, ds, plan, FULL, backend="python")
    try:
        b = simulate(m, ds, plan, FULL, backend="cython")
    except ImportError:
        pytest.skip("compiled kernel not built")
    assert np.array_equal(a.means, b.means) and np.array_equal(a.draws, b.draws)


def test_streaming_equals_full_and_workers_do_not_matter(backend):
    m = analyze(generate(GeneratorConfig(2, 5, 3, 20, True, 2)))
    ds = enumerate_design_space(m)
    plan = RandomPlan(17, 777)
    full = simulate(m, ds, plan, FULL, backend=backend)
    stream = simulate(m, ds, plan, STREAMING, backend=backend)
    par = simulate(m, ds, plan, STREAMING, workers=3, backend=backend)
    assert stream.draws is None
    assert np.array_equal(full.means, stream.means) and np.array_equal(full.means, par.means)
    shortlist = [0, ds.size // 2, ds.size - 1]
    sliced = nb_matrix(m, shortlist, plan, "Obj2", result=full)
    regen = nb_matrix(m, shortlist, plan, "Obj2", result=stream, workers=2)
    fresh = nb_matrix(m, shortlist, plan, "Obj2", design_space=ds, backend=backend)
    assert np.array_equal(sliced.values, regen.values) and np.array_equal(sliced.values, fresh.values)
    assert sliced.values.shape == (plan.N, 3) and sliced.solution_ids == tuple(shortlist)


def test_means_are_means_of_draws():
    m = analyze(generate(GeneratorConfig(2, 3, 2, 0, False, 4)))
    res = simulate(m, enumerate_design_space(m), RandomPlan(0, 1000), FULL)
    assert np.allclose(res.means, res.draws.mean(axis=2), rtol=1e-14, atol=1e-12)


def test_common_random_numbers():
    m = model_of('Model M; Objective Max O = EV(X); P = normal(0, 1); '
                 'X = decision("D"){"a": P; "b": P + 1; "c": 2 * P;};')
    res = simulate(m, enumerate_design_space(m), RandomPlan(2, 500), FULL)
    d = res.draws[:, 0, :]
    assert np.array_equal(d[1], d[0] + 1) and np.array_equal(d[2], 2 * d[0])


def test_nb_single_column_mean():
    m = analyze(generate(GeneratorConfig(1, 2, 3, 0, False, 1)))
    ds = enumerate_design_space(m)
    plan = RandomPlan(1, 400)
    res = simulate(m, ds, plan, FULL)
    nb = nb_matrix(m, [4], plan, "Obj1", result=res)
    assert nb.M == 1 and np.isclose(nb.values.mean(), res.means[4, 0], rtol=1e-14)


def test_nb_constant_model_two_columns():
    m = model_of('Model M; Objective Max O = EV(X); X = decision("D"){"a": 3; "b": 3;};')
    nb = nb_matrix(m, [0, 1], RandomPlan(0, 5), "O")
    assert (nb.values == 3.0).all() and nb.values.shape == (5, 2)


def test_nb_matrix_from_values():
    v = np.arange(6.0).reshape(3, 2)
    nb = NbMatrix.from_values(v, [4, 9], "O")
    assert np.array_equal(nb.values, v) and (nb.N, nb.M) == (3, 2)
    with pytest.raises(ValueError):
        NbMatrix.from_values(np.empty((3, 0)), [], "O")


def test_nb_unknown_objective():
    m = model_of("Model M; Objective Max O = EV(X); X = 1;")
    with pytest.raises(KeyError):
        nb_matrix(m, [0], RandomPlan(0, 2), "Nope")


@pytest.mark.parametrize("expr,op", [("1 / (P - P)", "/"), ("(P + 1e308) * 10", "*"), ("(0 - P) ^ 0.5", "^")])
def test_numeric_errors_locate_node(expr, op, backend):
    src = f"Model M; Objective Max O = EV(X); P = uniform(1, 2); X = {expr};"
    line_col = (1, src.index(op, src.index("X =") + 3) + 1)  # the failing operator
    m = model_of(src)
    ds = enumerate_design_space(m)
    with pytest.raises(NumericError) as exc:
        simulate(m, ds, RandomPlan(0, 10), backend=backend)
    with pytest.raises(NumericError) as ref:
        evaluate_run(m, ds.solution(0), RandomPlan(0, 10), 0)
    assert exc.value.run == 0 == ref.value.run
    assert (exc.value.line, exc.value.col) == (ref.value.line, ref.value.col) == line_col


def test_numeric_error_in_later_run(backend):
    # a constant-free failure that only some runs hit: log-like blow-up via ^ of a negative base
    m = model_of("Model M; Objective Max O = EV(X); P = uniform(-1, 1); X = P ^ 0.5;")
    ds = enumerate_design_space(m)
    plan = RandomPlan(4, 50)
    with pytest.raises(NumericError) as exc:
        simulate(m, ds, plan, backend=backend)
    u = [evaluate_run(m, ds.solution(0), plan, i) if i < exc.value.run else None
         for i in range(exc.value.run)]
    assert len(u) == exc.value.run  # every earlier run was finite
    with pytest.raises(NumericError):
        evaluate_run(m, ds.solution(0), plan, exc.value.run)


def test_capacity_error():
    with pytest.raises(CapacityError):
        resolve_mode(FULL, 1000, 2, 10**6, memory_budget=10**6)
    assert resolve_mode("auto", 10**5, 2, 10**4) == STREAMING
    assert resolve_mode("auto", 10, 2, 10**4) == FULL
    m = model_of("Model M; Objective Max O = EV(X); X = 1;")
    with pytest.raises(CapacityError):
        simulate(m, enumerate_design_space(m), RandomPlan(0, 1000), FULL, memory_budget=100)


def test_inactive_decision_is_an_error():
    m = model_of('Model M; Objective Max O = EV(X); X = decision("D"){"a": 1;};')
    with pytest.raises(AnalysisError):
        evaluate_run(m, Solution({}), RandomPlan(0, 1), 0)


def test_fold_is_pairwise():
    lanes = np.array([[[1.0, 2, 3, 4, 5, 6, 7, 8]]])
    assert fold(lanes)[0, 0] == ((1 + 2) + (3 + 4)) + ((5 + 6) + (7 + 8))
    assert new_accumulator(2, 3).shape == (2, 3, 8)


def test_engine_parameter_draws_match_sample():
    from radar.simulation import param_id, sample

    m = model_of("Model M; Objective Max O = EV(X); P = normal(3, 1); Q = uniform(0, 1); X = P;")
    plan = RandomPlan(8, 20)
    eng = Engine(m, plan)
    for name in ("P", "Q"):
        draws = eng.parameter_draws(name)
        assert [sample(m.parameter_spec(name), plan, param_id(name), i) for i in range(20)] == draws.tolist()

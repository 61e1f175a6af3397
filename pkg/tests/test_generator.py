import random

import pytest

from radar.designspace import enumerate_design_space, size_without_enumeration
from radar.errors import ConfigError
from radar.generator import GeneratorConfig, generate, generate_suite
from radar.language import VarDef, analyze, parse, pretty_print, tokenize
from radar.language.nodes import BinaryOp, walk
from radar.simulation import RandomPlan, simulate


def random_config(r, seed):
    return GeneratorConfig(r.randrange(1, 5), r.randrange(0, 7), r.randrange(1, 5), r.randrange(0, 150),
                           r.random() < 0.5, seed)


def structure_ok(cfg, m):
    n_vars = sum(isinstance(s, VarDef) for s in m.ast.statements)
    ok = (len(m.objectives) == cfg.objectives and len(m.decisions) == cfg.decisions
          and all(len(d.options) == cfg.options_per_decision for d in m.decisions)
          and n_vars >= cfg.min_variables)
    if cfg.with_dependencies and cfg.decisions >= 2:
        ok = ok and len(m.dependency_edges) >= 1
    else:
        ok = ok and m.dependency_edges == () and size_without_enumeration(m) == cfg.expected_size
    return ok


def test_defaults_and_determinism():
    cfg = GeneratorConfig()
    assert generate(cfg) == generate(cfg)
    assert generate(GeneratorConfig(seed=1)) != generate(GeneratorConfig(seed=2))


@pytest.mark.parametrize("seed", range(30))
def test_structure_and_simulation(seed):
    cfg = random_config(random.Random(seed), seed)
    m = analyze(generate(cfg))
    assert structure_ok(cfg, m)
    res = simulate(m, enumerate_design_space(m), RandomPlan(seed, 10))
    assert res.means.shape == (size_without_enumeration(m), cfg.objectives)


def test_min_variables_chain():
    m = analyze(generate(GeneratorConfig(2, 10, 3, 100, False, 0)))
    assert sum(isinstance(s, VarDef) for s in m.ast.statements) >= 100


def test_dependencies_reduce_size():
    m = analyze(generate(GeneratorConfig(1, 4, 3, 0, True, 3)))
    assert m.dependency_edges and size_without_enumeration(m) < 3**4


def test_no_division_or_power():
    m = generate(GeneratorConfig(3, 6, 4, 20, True, 9))
    assert not any(isinstance(n, BinaryOp) and n.op in "/^" for n in walk(m))


def test_round_trip():
    r = random.Random(1)
    for seed in range(50):
        ast = generate(random_config(r, seed))
        assert parse(tokenize(pretty_print(ast))) == ast


@pytest.mark.parametrize("field,value", [("objectives", 0), ("decisions", -1), ("options_per_decision", 0),
                                         ("min_variables", -5), ("objectives", 1.5), ("decisions", True)])
def test_validation(field, value):
    kwargs = {field: value}
    with pytest.raises(ConfigError):
        generate(GeneratorConfig(**kwargs))


def test_suite():
    plan = [GeneratorConfig(1, 2, 3, 0, False, 0), GeneratorConfig(2, 3, 2, 5, True, 1)]
    out = generate_suite(plan)
    assert [c for c, _, _ in out] == plan
    assert out[0][2] == 9 and out[1][2] == size_without_enumeration(analyze(out[1][1]))

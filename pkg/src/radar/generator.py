"""Random, valid and numerically safe models for benchmarking and fuzzing."""

from __future__ import annotations

import random
from dataclasses import dataclass

from radar.errors import ConfigError
from radar.language.nodes import (
    BinaryOp,
    DecisionBlock,
    DistributionCall,
    ModelAst,
    Number,
    ObjectiveDecl,
    Option,
    VarDef,
    VarRef,
)

MAX_OBJECTIVES = 16
MAX_DECISIONS = 32
MAX_OPTIONS = 16
MAX_VARIABLES = 100_000


@dataclass(frozen=True)
class GeneratorConfig:
    objectives: int = 1
    decisions: int = 0
    options_per_decision: int = 2
    min_variables: int = 0
    with_dependencies: bool = False
    seed: int = 0

    def validate(self):
        checks = (
            ("objectives", self.objectives, 1, MAX_OBJECTIVES),
            ("decisions", self.decisions, 0, MAX_DECISIONS),
            ("options_per_decision", self.options_per_decision, 1, MAX_OPTIONS),
            ("min_variables", self.min_variables, 0, MAX_VARIABLES),
        )
        for name, value, lo, hi in checks:
            if not isinstance(value, int) or isinstance(value, bool) or not lo <= value <= hi:
                raise ConfigError(f"{name} must be an integer in [{lo}, {hi}], got {value!r}")
        if not isinstance(self.seed, int) or not -(2**63) <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit integer, got {self.seed!r}")
        return self

    @property
    def expected_size(self):
        """|DS| for models without dependencies."""
        return self.options_per_decision ** self.decisions


def _num(r, lo, hi, digits=2):
    return Number(round(r.uniform(lo, hi), digits))


def _distribution(r):
    kind = r.choice(("normal", "uniform", "triangular", "exponential", "deterministic"))
    if kind == "normal":
        mu = round(r.uniform(1, 100), 2)
        args = (Number(mu), Number(round(r.uniform(0.1, 0.3 * mu), 2) or 0.1))
    elif kind == "uniform":
        lo = round(r.uniform(0, 50), 2)
        args = (Number(lo), Number(round(lo + r.uniform(0.5, 50), 2)))
    elif kind == "triangular":
        lo = round(r.uniform(0, 50), 2)
        hi = round(lo + r.uniform(1, 50), 2)
        args = (Number(lo), Number(round(r.uniform(lo, hi), 2)), Number(hi))
    elif kind == "exponential":
        args = (Number(round(r.uniform(0.05, 2), 3)),)
    else:
        args = (Number(round(r.uniform(1, 100), 2)),)
    return DistributionCall(kind, args)


def _combine(r, terms, ops=("+", "+", "+", "-", "-", "*")):
    """Fold terms into a random binary tree."""
    terms = list(terms)
    while len(terms) > 1:
        i = r.randrange(len(terms) - 1)
        terms[i:i + 2] = [BinaryOp(r.choice(ops), terms[i], terms[i + 1])]
    return terms[0]


def _option_body(r, params):
    p = VarRef(r.choice(params))
    shape = r.randrange(5)
    if shape == 0:
        return _num(r, 1, 100)
    if shape == 1:
        return BinaryOp("*", p, _num(r, 0.1, 3))
    if shape == 2:
        return BinaryOp("+", BinaryOp("*", p, _num(r, 0.1, 3)), _num(r, -20, 20))
    if shape == 3:
        return BinaryOp("+", p, VarRef(r.choice(params)))
    return BinaryOp("*", _distribution(r), _num(r, 0.1, 2))


def generate(config: GeneratorConfig) -> ModelAst:
    config.validate()
    r = random.Random(config.seed)
    n_params = 2 + r.randrange(3)
    params = [f"P{i + 1}" for i in range(n_params)]
    defs = [VarDef(p, _distribution(r)) for p in params]

    names = [f"Dec{k + 1}" for k in range(config.decisions)]
    bodies = [
        [_option_body(r, params) for _ in range(config.options_per_decision)]
        for _ in names
    ]
    nested = set()
    if config.with_dependencies and config.decisions >= 2:
        for k in range(1, config.decisions):
            # the first pair is always nested so at least one edge exists
            if k == 1 or r.random() < 0.5:
                parent = r.randrange(k)
                opt = r.randrange(config.options_per_decision)
                bodies[parent][opt] = BinaryOp(
                    "+", bodies[parent][opt], BinaryOp("*", VarRef(names[k]), _num(r, 0.1, 2))
                )
                nested.add(k)
    for k, name in enumerate(names):
        options = tuple(Option(f"opt{j + 1}", body) for j, body in enumerate(bodies[k]))
        defs.append(VarDef(name, DecisionBlock(f"D{k + 1}", options)))
    roots = [n for k, n in enumerate(names) if k not in nested]

    chain = []
    needed = config.min_variables - (len(defs) + config.objectives)
    prev = params[0]
    for i in range(max(0, needed)):
        chain.append(VarDef(f"I{i + 1}", VarRef(prev)))
        prev = f"I{i + 1}"

    objectives, targets = [], []
    for i in range(config.objectives):
        terms = [BinaryOp("*", VarRef(d), _num(r, -3, 3) if r.random() < 0.3 else _num(r, 0.1, 3))
                 for d in roots]
        terms.append(BinaryOp("*", VarRef(r.choice(params)), _num(r, 0.1, 2)))
        r.shuffle(terms)
        expr = _combine(r, terms)
        if i == 0 and chain:
            expr = BinaryOp("+", expr, VarRef(prev))
        target = f"Value{i + 1}"
        targets.append(VarDef(target, expr))
        direction = "Max" if i == 0 else r.choice(("Max", "Min"))
        objectives.append(ObjectiveDecl(f"Obj{i + 1}", direction, target))

    return ModelAst(f"Synthetic{config.seed & 0xFFFF}", tuple(objectives + defs + chain + targets))


def generate_suite(plan):
    """One (config, model, |DS|) triple per configuration."""
    from radar.designspace import size_without_enumeration
    from radar.language.semantics import analyze

    out = []
    for config in plan:
        ast = generate(config)
        out.append((config, ast, size_without_enumeration(analyze(ast))))
    return out

"""Reference evaluator: one run of one solution by direct AST traversal.

This is deliberately independent of the compiler and kernels and is used
both as a test oracle and to pinpoint the AST node behind a numeric error.
"""

from __future__ import annotations

import math
import sys

from radar.errors import AnalysisError, NumericError
from radar.language.nodes import (
    BinaryOp,
    DecisionBlock,
    DistributionCall,
    Number,
    UnaryNeg,
    VarRef,
)
from radar.simulation import rng
from radar.simulation.arith import apply_scalar


def evaluate_run(model, solution, plan, run_index: int) -> dict:
    """Objective name -> simulated value for one run of ``solution``."""
    bindings = solution.bindings
    memo: dict[str, float] = {}
    label = solution.label() if hasattr(solution, "label") else str(bindings)

    def fail(message, node):
        line, col = node.pos
        raise NumericError(message, solution=label, run=run_index, line=line, col=col)

    def var(name):
        if name not in memo:
            memo[name] = ev(model.definitions[name].expr)
        return memo[name]

    def ev(node):
        if isinstance(node, Number):
            return node.value
        if isinstance(node, VarRef):
            return var(node.name)
        if isinstance(node, DistributionCall):
            key, spec = model.distributions[id(node)]
            return rng.sample(spec, plan, rng.param_id(key), run_index)
        if isinstance(node, UnaryNeg):
            return -ev(node.operand)
        if isinstance(node, BinaryOp):
            a, b = ev(node.lhs), ev(node.rhs)
            out = apply_scalar(node.op, a, b)
            if not math.isfinite(out) and node.op in "+-*" and math.isfinite(a) and math.isfinite(b):
                fail(f"overflow in '{node.op}'", node)
            if node.op in "/^" and not (math.isfinite(a) and math.isfinite(b) and math.isfinite(out)):
                fail(f"non-finite result of '{node.op}'", node)
            return out
        if isinstance(node, DecisionBlock):
            if node.name not in bindings:
                raise AnalysisError(f"decision '{node.name}' evaluated while inactive")
            chosen = bindings[node.name]
            for opt in node.options:
                if opt.name == chosen:
                    return ev(opt.body)
            raise AnalysisError(f"decision '{node.name}' has no option '{chosen}'")
        raise TypeError(f"cannot evaluate {node!r}")

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20 * model.node_count + 1000))
    try:
        result = {}
        for obj in model.objectives:
            value = var(obj.target)
            if not math.isfinite(value):
                fail(f"objective '{obj.name}' is not finite", model.definitions[obj.target])
            result[obj.name] = value
        return result
    finally:
        sys.setrecursionlimit(limit)

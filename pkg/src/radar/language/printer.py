from __future__ import annotations

import math

from radar.language.nodes import (
    BinaryOp,
    DecisionBlock,
    DistributionCall,
    ModelAst,
    Number,
    ObjectiveDecl,
    UnaryNeg,
    VarDef,
    VarRef,
)

# binding strength; a child printed below the required level gets parentheses
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5
_INDENT = "  "


def format_number(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"cannot print non-finite literal {value!r}")
    return repr(float(value))


def quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


def _level(node):
    if isinstance(node, BinaryOp):
        return {"+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "^": _POW}[node.op]
    if isinstance(node, UnaryNeg):
        return _UNARY
    if isinstance(node, Number) and math.copysign(1.0, node.value) < 0:
        return _UNARY
    return _ATOM


def _expr(node, need, depth):
    text = _bare(node, depth)
    return f"({text})" if _level(node) < need else text


def _bare(node, depth):
    if isinstance(node, Number):
        return format_number(node.value)
    if isinstance(node, VarRef):
        return node.name
    if isinstance(node, BinaryOp):
        if node.op in "+-":
            lhs, rhs = _expr(node.lhs, _ADD, depth), _expr(node.rhs, _MUL, depth)
            return f"{lhs} {node.op} {rhs}"
        if node.op in "*/":
            lhs, rhs = _expr(node.lhs, _MUL, depth), _expr(node.rhs, _UNARY, depth)
            return f"{lhs} {node.op} {rhs}"
        return f"{_expr(node.lhs, _ATOM, depth)}^{_expr(node.rhs, _UNARY, depth)}"
    if isinstance(node, UnaryNeg):
        inner = node.operand
        # a bare literal after '-' would re-parse as a negative literal
        if isinstance(inner, Number):
            return f"-({_bare(inner, depth)})"
        return f"-{_expr(inner, _UNARY, depth)}"
    if isinstance(node, DistributionCall):
        args = ", ".join(_expr(a, _ADD, depth) for a in node.args)
        return f"{node.kind}({args})"
    if isinstance(node, DecisionBlock):
        pad = _INDENT * (depth + 1)
        lines = [f"decision({quote(node.name)}) {{"]
        for opt in node.options:
            lines.append(f"{pad}{quote(opt.name)}: {_expr(opt.body, _ADD, depth + 1)};")
        lines.append(f"{_INDENT * depth}}}")
        return "\n".join(lines)
    raise TypeError(f"not an expression node: {node!r}")


def pretty_print(ast: ModelAst) -> str:
    out = [f"Model {ast.name};"]
    for stmt in ast.statements:
        if isinstance(stmt, ObjectiveDecl):
            out.append(f"Objective {stmt.direction} {stmt.name} = EV({stmt.target});")
        elif isinstance(stmt, VarDef):
            out.append(f"{stmt.name} = {_expr(stmt.expr, _ADD, 0)};")
        else:
            raise TypeError(f"not a statement: {stmt!r}")
    return "\n".join(out) + "\n"

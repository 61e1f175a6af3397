"""Semantic analysis: name resolution, cycle detection and decision structure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

from radar.errors import InvalidDistribution, SemanticError
from radar.language.nodes import (
    BinaryOp,
    DecisionBlock,
    DistributionCall,
    ModelAst,
    Node,
    Number,
    ObjectiveDecl,
    Option,
    UnaryNeg,
    VarDef,
    VarRef,
    children,
    count_nodes,
    walk,
)

TOP = None  # context marker: reachable outside any option body


@dataclass(frozen=True)
class Objective:
    name: str
    direction: str
    target: str

    @property
    def maximize(self) -> bool:
        return self.direction == "Max"


@dataclass(frozen=True)
class Decision:
    name: str
    options: Tuple[str, ...]

    def __post_init__(self):
        if not self.options:
            raise ValueError(f"decision {self.name!r} has no options")
        if len(set(self.options)) != len(self.options):
            raise ValueError(f"decision {self.name!r} has duplicate options")


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    args: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class SemanticModel:
    ast: ModelAst
    node_count: int
    objectives: Tuple[Objective, ...]
    decisions: Tuple[Decision, ...]
    parameters: Tuple[str, ...]
    dependency_edges: Tuple[Tuple[str, str, str], ...]
    definitions: Mapping[str, VarDef] = field(repr=False)
    # inner decision -> (outer decision, options of outer under which it is active)
    parents: Mapping[str, Tuple[str, Tuple[str, ...]]] = field(repr=False)
    # id(DistributionCall node) -> (stable key, spec)
    distributions: Mapping[int, Tuple[str, DistributionSpec]] = field(repr=False)

    @property
    def decision_index(self):
        return {d.name: i for i, d in enumerate(self.decisions)}

    @property
    def roots(self):
        return tuple(d for d in self.decisions if d.name not in self.parents)

    def children_of(self, decision: str, option: str):
        return tuple(
            inner for outer, opt, inner in self.dependency_edges if outer == decision and opt == option
        )

    def parameter_spec(self, name: str) -> DistributionSpec:
        expr = self.definitions[name].expr
        return self.distributions[id(expr)][1]


def const_value(node: Node) -> float:
    """Evaluate a constant expression with IEEE semantics."""
    if isinstance(node, Number):
        return node.value
    if isinstance(node, UnaryNeg):
        return -const_value(node.operand)
    if isinstance(node, BinaryOp):
        from radar.simulation.arith import apply_scalar

        return apply_scalar(node.op, const_value(node.lhs), const_value(node.rhs))
    raise TypeError(f"not a constant expression: {node!r}")


def check_distribution(kind, args):
    """Return an error message for invalid arguments, or None."""
    if any(not math.isfinite(a) for a in args):
        return f"{kind} arguments must be finite"
    if kind == "normal" and not args[1] > 0:
        return "normal requires sd > 0"
    if kind == "uniform" and not args[0] < args[1]:
        return "uniform requires lo < hi"
    if kind == "triangular":
        lo, mode, hi = args
        if not (lo <= mode <= hi and lo < hi):
            return "triangular requires lo <= mode <= hi and lo < hi"
    if kind == "exponential" and not args[0] > 0:
        return "exponential requires rate > 0"
    return None


def _refs(expr):
    return [n for n in walk(expr) if isinstance(n, VarRef)]


def _find_cycle(graph, order):
    color = dict.fromkeys(graph, 0)
    for start in order:
        if color[start]:
            continue
        stack = [(start, iter(graph[start]))]
        path = [start]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
                continue
            if color.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            if color.get(nxt) == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(graph[nxt])))
    return None


def _sites(expr):
    """Yield (node, ctx) where ctx is the nearest enclosing (decision, option)."""
    stack = [(expr, TOP)]
    while stack:
        node, ctx = stack.pop()
        yield node, ctx
        if isinstance(node, DecisionBlock):
            for opt in reversed(node.options):
                stack.append((opt.body, (node.name, opt.name)))
        else:
            for child in reversed(children(node)):
                stack.append((child, ctx))


def analyze(ast: ModelAst) -> SemanticModel:
    issues = []
    definitions: dict[str, VarDef] = {}
    objectives = []
    objective_names = set()
    for stmt in ast.statements:
        if isinstance(stmt, VarDef):
            if stmt.name in definitions:
                issues.append((f"duplicate definition of variable '{stmt.name}'", *stmt.pos))
            else:
                definitions[stmt.name] = stmt
        elif isinstance(stmt, ObjectiveDecl):
            if stmt.name in objective_names:
                issues.append((f"duplicate objective '{stmt.name}'", *stmt.pos))
            objective_names.add(stmt.name)
            objectives.append(stmt)

    for obj in objectives:
        if obj.target not in definitions:
            issues.append(
                (f"objective '{obj.name}' targets undefined variable '{obj.target}'", *obj.pos)
            )

    graph = {}
    for name, vd in definitions.items():
        deps = []
        for ref in _refs(vd.expr):
            if ref.name not in definitions:
                issues.append((f"undefined variable '{ref.name}'", *ref.pos))
            elif ref.name not in deps:
                deps.append(ref.name)
        graph[name] = deps

    decisions = []
    blocks: dict[str, DecisionBlock] = {}
    for stmt in ast.statements:
        if not isinstance(stmt, VarDef):
            continue
        for node in walk(stmt.expr):
            if not isinstance(node, DecisionBlock):
                continue
            if node.name in blocks:
                issues.append((f"duplicate decision name '{node.name}'", *node.pos))
                continue
            blocks[node.name] = node
            names = [o.name for o in node.options]
            if not names:
                issues.append((f"decision '{node.name}' has no options", *node.pos))
                continue
            seen = set()
            for opt in node.options:
                if opt.name in seen:
                    issues.append(
                        (f"duplicate option '{opt.name}' in decision '{node.name}'", *opt.pos)
                    )
                seen.add(opt.name)
            if len(seen) == len(names):
                decisions.append(Decision(node.name, tuple(names)))

    if not any("undefined variable" in msg for msg, *_ in issues):
        cycle = _find_cycle(graph, list(definitions))
        if cycle:
            line, col = definitions[cycle[0]].pos
            issues.append((f"cyclic definition: {' -> '.join(cycle)}", line, col))

    if issues:
        raise SemanticError(issues)

    distributions, dist_issues = _distributions(definitions)
    if dist_issues:
        raise InvalidDistribution(dist_issues)

    parents, edges = _decision_structure(ast, definitions, graph, objectives, decisions)

    parameters = tuple(
        name for name, vd in definitions.items() if isinstance(vd.expr, DistributionCall)
    )
    return SemanticModel(
        ast=ast,
        node_count=count_nodes(ast),
        objectives=tuple(Objective(o.name, o.direction, o.target) for o in objectives),
        decisions=tuple(decisions),
        parameters=parameters,
        dependency_edges=tuple(edges),
        definitions=MappingProxyType(definitions),
        parents=MappingProxyType(parents),
        distributions=MappingProxyType(distributions),
    )


def _distributions(definitions):
    table = {}
    issues = []
    for name, vd in definitions.items():
        if isinstance(vd.expr, DistributionCall):
            calls = [(vd.expr, name)]
        else:
            calls = [
                (node, f"{name}#{k}")
                for k, node in enumerate(n for n in walk(vd.expr) if isinstance(n, DistributionCall))
            ]
        for node, key in calls:
            try:
                args = tuple(const_value(a) for a in node.args)
            except (TypeError, ValueError) as exc:
                issues.append((str(exc), *node.pos))
                continue
            problem = check_distribution(node.kind, args)
            if problem:
                issues.append((problem, *node.pos))
                continue
            table[id(node)] = (key, DistributionSpec(node.kind, args))
    return table, issues


def _decision_structure(ast, definitions, graph, objectives, decisions):
    """Work out which option (if any) each decision is nested under.

    A variable inherits the contexts of the places that reference it; a
    decision referenced from anywhere outside an option body is top level.
    """
    referenced_from: dict[str, list] = {name: [] for name in definitions}
    block_sites: dict[str, list] = {}
    for name, vd in definitions.items():
        for node, ctx in _sites(vd.expr):
            if isinstance(node, VarRef):
                referenced_from[node.name].append((name, ctx))
            elif isinstance(node, DecisionBlock):
                block_sites[node.name] = (name, ctx)

    targets = {o.target for o in objectives}
    memo: dict[str, frozenset] = {}

    def contexts(var):
        if var in memo:
            return memo[var]
        result = set()
        if var in targets or not referenced_from[var]:
            result.add(TOP)
        for user, ctx in referenced_from[var]:
            if ctx is TOP:
                result |= contexts(user)
            else:
                result.add(ctx)
        memo[var] = frozenset(result)
        return memo[var]

    # resolve in reverse topological order to keep recursion shallow
    for var in reversed(_topological(graph)):
        contexts(var)

    parents = {}
    edges = []
    issues = []
    for dec in decisions:
        owner, ctx = block_sites[dec.name]
        ctxs = {ctx} if ctx is not TOP else set(contexts(owner))
        if TOP in ctxs:
            continue
        outers = sorted({outer for outer, _ in ctxs})
        if len(outers) > 1:
            pos = definitions[owner].pos
            issues.append(
                (
                    f"decision '{dec.name}' is nested under several decisions ({', '.join(outers)})",
                    *pos,
                )
            )
            continue
        outer = outers[0]
        outer_opts = next(d.options for d in decisions if d.name == outer)
        opts = tuple(o for o in outer_opts if (outer, o) in ctxs)
        parents[dec.name] = (outer, opts)
        edges.extend((outer, o, dec.name) for o in opts)
    if issues:
        raise SemanticError(issues)
    return parents, edges


def _topological(graph):
    """Variables ordered so that every variable comes after the ones it references."""
    order, state = [], {}
    for start in graph:
        if start in state:
            continue
        stack = [(start, iter(graph[start]))]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                order.append(node)
            elif nxt not in state:
                state[nxt] = 1
                stack.append((nxt, iter(graph[nxt])))
    return order

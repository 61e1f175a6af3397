"""Design-space enumeration.

A solution binds every *active* decision to one of its options. Top-level
decisions are always active; a nested decision is active only when its
enclosing decision is bound to an option whose body contains it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from radar.errors import DesignSpaceOverflow
from radar.language.nodes import DecisionBlock, VarDef, walk
from radar.language.semantics import Decision, SemanticModel

DEFAULT_CAP = 10**7
UNBOUND = -1


@dataclass(frozen=True)
class Solution:
    bindings: Mapping[str, str]

    def __hash__(self):
        return hash(tuple(sorted(self.bindings.items())))

    def __eq__(self, other):
        return isinstance(other, Solution) and dict(self.bindings) == dict(other.bindings)

    def label(self) -> str:
        return "; ".join(f"{d}={o}" for d, o in self.bindings.items()) or "(no decisions)"


class DesignSpace:
    """All admissible solutions, stored as a compact choice matrix.

    ``choices[s, d]`` is the option index of decision ``d`` in solution
    ``s`` or -1 when the decision is inactive. Row order is lexicographic
    over decisions in source order, unbound sorting first.
    """

    def __init__(self, decisions, choices):
        self.decisions = tuple(decisions)
        self.choices = np.ascontiguousarray(choices, dtype=np.int32)
        self.choices.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.choices.shape[0])

    def __len__(self):
        return self.size

    def solution(self, index: int) -> Solution:
        row = self.choices[index]
        return Solution(
            {
                d.name: d.options[k]
                for d, k in zip(self.decisions, row.tolist())
                if k != UNBOUND
            }
        )

    def __getitem__(self, index):
        return self.solution(index)

    def __iter__(self) -> Iterator[Solution]:
        return (self.solution(i) for i in range(self.size))

    @property
    def solutions(self) -> list[Solution]:
        return list(self)

    def index_of(self, solution: Solution) -> int:
        target = np.full(len(self.decisions), UNBOUND, dtype=np.int32)
        for j, d in enumerate(self.decisions):
            if d.name in solution.bindings:
                target[j] = d.options.index(solution.bindings[d.name])
        hits = np.flatnonzero((self.choices == target).all(axis=1))
        if not len(hits):
            raise KeyError(solution)
        return int(hits[0])


def collect_decisions(model: SemanticModel) -> list[Decision]:
    """Decisions in depth-first source order, from one pass over the AST."""
    found = []
    for stmt in model.ast.statements:
        if isinstance(stmt, VarDef):
            for node in walk(stmt.expr):
                if isinstance(node, DecisionBlock):
                    found.append(Decision(node.name, tuple(o.name for o in node.options)))
    return found


def size_without_enumeration(model: SemanticModel) -> int:
    """Exact design-space size from the decision forest, without enumerating."""
    memo = {}

    def tree_size(name):
        if name not in memo:
            decision = next(d for d in model.decisions if d.name == name)
            total = 0
            for opt in decision.options:
                prod = 1
                for child in model.children_of(name, opt):
                    prod *= tree_size(child)
                total += prod
            memo[name] = total
        return memo[name]

    size = 1
    for root in model.roots:
        size *= tree_size(root.name)
    return size


def _parent_first(model):
    order, placed = [], set()
    pending = list(model.decisions)
    while pending:
        rest = []
        for d in pending:
            parent = model.parents.get(d.name)
            if parent is None or parent[0] in placed:
                order.append(d)
                placed.add(d.name)
            else:
                rest.append(d)
        pending = rest
    return order


def enumerate_design_space(model: SemanticModel, cap: int = DEFAULT_CAP) -> DesignSpace:
    size = size_without_enumeration(model)
    if size > cap:
        raise DesignSpaceOverflow(size, cap)
    if model.decisions and not model.parents:
        # independent decisions: the lexicographic Cartesian product
        shape = tuple(len(d.options) for d in model.decisions)
        rows = np.indices(shape, dtype=np.int32).reshape(len(shape), -1).T
        return DesignSpace(model.decisions, rows)
    index = model.decision_index
    rows = np.full((1, len(model.decisions)), UNBOUND, dtype=np.int32)
    for decision in _parent_first(model):
        col = index[decision.name]
        parent = model.parents.get(decision.name)
        if parent is None:
            active = np.ones(len(rows), dtype=bool)
        else:
            outer, opts = parent
            outer_dec = model.decisions[index[outer]]
            wanted = [outer_dec.options.index(o) for o in opts]
            active = np.isin(rows[:, index[outer]], wanted)
        k = len(decision.options)
        grown = np.repeat(rows[active], k, axis=0)
        grown[:, col] = np.tile(np.arange(k, dtype=np.int32), int(active.sum()))
        rows = np.concatenate([rows[~active], grown])
    if rows.shape[1]:
        rows = rows[np.lexsort(rows.T[::-1])]
    assert len(rows) == size
    return DesignSpace(model.decisions, rows)


# alias; ``enumerate`` would shadow the builtin inside this module
enumerate_solutions = enumerate_design_space


def iter_solutions(model: SemanticModel, cap: int = DEFAULT_CAP) -> Iterator[Solution]:
    """Lazy, single-consumer iterator over the design space."""
    return iter(enumerate_design_space(model, cap))

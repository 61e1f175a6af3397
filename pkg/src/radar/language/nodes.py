"""AST node types for the model language.

Nodes are frozen dataclasses. Source positions are carried in ``pos`` but
excluded from equality, so a re-parsed tree compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Tuple

DISTRIBUTIONS = {
    "deterministic": 1,
    "normal": 2,
    "uniform": 2,
    "triangular": 3,
    "exponential": 1,
}

BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Node:
    pos: Tuple[int, int] = field(default=(0, 0), compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Number(Node):
    value: float


@dataclass(frozen=True)
class VarRef(Node):
    name: str


@dataclass(frozen=True)
class BinaryOp(Node):
    op: str
    lhs: Node
    rhs: Node


@dataclass(frozen=True)
class UnaryNeg(Node):
    operand: Node


@dataclass(frozen=True)
class DistributionCall(Node):
    kind: str
    args: Tuple[Node, ...]


@dataclass(frozen=True)
class Option(Node):
    name: str
    body: Node


@dataclass(frozen=True)
class DecisionBlock(Node):
    name: str
    options: Tuple[Option, ...]


@dataclass(frozen=True)
class ObjectiveDecl(Node):
    name: str
    direction: str  # "Max" or "Min"
    target: str


@dataclass(frozen=True)
class VarDef(Node):
    name: str
    expr: Node


@dataclass(frozen=True)
class ModelAst(Node):
    name: str
    statements: Tuple[Node, ...]


def children(node: Node) -> Tuple[Node, ...]:
    if isinstance(node, BinaryOp):
        return (node.lhs, node.rhs)
    if isinstance(node, UnaryNeg):
        return (node.operand,)
    if isinstance(node, DistributionCall):
        return node.args
    if isinstance(node, DecisionBlock):
        return node.options
    if isinstance(node, Option):
        return (node.body,)
    if isinstance(node, VarDef):
        return (node.expr,)
    if isinstance(node, ModelAst):
        return node.statements
    return ()


def walk(node: Node) -> Iterator[Node]:
    """Pre-order depth-first traversal (source order)."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(children(current)))


def count_nodes(node: Node) -> int:
    return sum(1 for _ in walk(node))

"""Compile a model into a flat instruction program for the simulation kernels.

Every value lives in a *slot*, a vector over simulation runs. Slots
``0 .. n_static-1`` hold decision-independent values (parameter draws,
constants and arithmetic over them). They are computed once by
:func:`run_prelude` and shared by all solutions. The remaining *scratch*
slots are recomputed for every solution by the kernel, which interprets
``code`` row by row:

=========  ===============================================================
op         meaning
=========  ===============================================================
ADD..POW   ``dst = a op b``; ``aux`` picks slot/slot, slot/const, const/slot
NEG        ``dst = -a``
SWITCH     jump to ``table[b + choice[a]]`` (``aux`` = option count)
ALIAS      make slot ``dst`` refer to the storage of slot ``a``
JUMP       ``pc = a``
CALL       evaluate variable ``a`` (entry ``b``) unless already memoised
RET        mark variable ``a`` as evaluated and return
HALT       stop
=========  ===============================================================

Variables referenced from several places are evaluated at most once per
solution and run block, and option bodies run only when selected.
"""

from __future__ import annotations

import math
import struct
import sys
from dataclasses import dataclass, field

import numpy as np

from radar.language.nodes import (
    BinaryOp,
    DecisionBlock,
    DistributionCall,
    Node,
    Number,
    UnaryNeg,
    VarRef,
    children,
)
from radar.language.semantics import SemanticModel
from radar.simulation import rng
from radar.simulation.arith import apply_scalar, apply_vector

OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW = 0, 1, 2, 3, 4
OP_NEG, OP_SWITCH, OP_ALIAS, OP_JUMP, OP_CALL, OP_RET, OP_HALT = 5, 6, 7, 8, 9, 10, 11
MODE_SS, MODE_SK, MODE_KS = 0, 1, 2
_BINOPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}
OP_SYMBOL = {v: k for k, v in _BINOPS.items()}


@dataclass
class StaticOp:
    kind: str  # "sample", "const", "binop", "neg"
    slot: int
    owner: str | None
    args: tuple = ()


@dataclass
class Program:
    code: np.ndarray  # int32 (n, 5): op, dst, a, b, aux
    consts: np.ndarray  # float64 (n, 2)
    table: np.ndarray  # int32 jump targets for SWITCH
    outputs: np.ndarray  # int32 slot per objective
    n_static: int
    n_slots: int
    n_vars: int
    static_ops: list
    positions: list
    param_slots: dict = field(default_factory=dict)
    forced: frozenset = frozenset()

    @property
    def n_scratch(self):
        return self.n_slots - self.n_static


def _const_key(value):
    return struct.pack("<d", value)


class _Compiler:
    def __init__(self, model: SemanticModel, forced=frozenset()):
        self.model = model
        self.forced = frozenset(forced)
        self.static_ops: list[StaticOp] = []
        self.const_slots = {}
        self.dist_slots = {}
        self.static_vars = {}
        self.n_scratch = 0
        self.dynamic_memo = {}
        self.var_entry = {}
        self.var_ids = {}
        self.var_result = {}
        self.blocks = []
        self.n_labels = 0
        self.dynamic_vars = self._dynamic_vars()

    # -- classification -------------------------------------------------
    def _dynamic_vars(self):
        dynamic = set()
        defs = self.model.definitions

        def visit(name):
            if name in done:
                return name in dynamic
            expr = defs[name].expr
            hit = name in self.forced
            for node in _iter(expr):
                if isinstance(node, DecisionBlock):
                    hit = True
                elif isinstance(node, VarRef) and visit(node.name):
                    hit = True
            done.add(name)
            if hit:
                dynamic.add(name)
            return hit

        done = set()
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 4 * len(defs) + 1000))
        try:
            for name in defs:
                visit(name)
        finally:
            sys.setrecursionlimit(limit)
        return dynamic

    def is_dynamic(self, node):
        key = id(node)
        if key not in self.dynamic_memo:
            if isinstance(node, DecisionBlock):
                result = True
            elif isinstance(node, VarRef):
                result = node.name in self.dynamic_vars
            elif isinstance(node, (Number, DistributionCall)):
                result = False
            else:
                result = any(self.is_dynamic(c) for c in children(node))
            self.dynamic_memo[key] = result
        return self.dynamic_memo[key]

    # -- static part ----------------------------------------------------
    def _new_static(self, kind, owner, args):
        slot = len(self.static_ops)
        self.static_ops.append(StaticOp(kind, slot, owner, args))
        return ("g", slot)

    def const_slot(self, value):
        key = _const_key(value)
        if key not in self.const_slots:
            self.const_slots[key] = self._new_static("const", None, (value,))
        return self.const_slots[key]

    def static(self, node, owner):
        if isinstance(node, Number):
            return ("k", node.value)
        if isinstance(node, VarRef):
            return self.static_var(node.name)
        if isinstance(node, DistributionCall):
            if id(node) not in self.dist_slots:
                key, spec = self.model.distributions[id(node)]
                self.dist_slots[id(node)] = self._new_static(
                    "sample", None, (spec, rng.param_id(key))
                )
            return self.dist_slots[id(node)]
        if isinstance(node, UnaryNeg):
            a = self.static(node.operand, owner)
            if a[0] == "k":
                return ("k", -a[1])
            return self._new_static("neg", owner, (a,))
        if isinstance(node, BinaryOp):
            a = self.static(node.lhs, owner)
            b = self.static(node.rhs, owner)
            if a[0] == "k" and b[0] == "k":
                value = apply_scalar(node.op, a[1], b[1])
                if math.isfinite(value):
                    return ("k", value)
            return self._new_static("binop", owner, (node.op, a, b))
        raise TypeError(f"cannot hoist {node!r}")

    def static_var(self, name):
        if name not in self.static_vars:
            self.static_vars[name] = self.static(self.model.definitions[name].expr, name)
        return self.static_vars[name]

    # -- dynamic part ---------------------------------------------------
    def label(self):
        self.n_labels += 1
        return ("L", self.n_labels)

    def scratch(self):
        self.n_scratch += 1
        return ("t", self.n_scratch - 1)

    def dyn(self, node, block, owner, inline=False):
        if isinstance(node, Number):
            return ("k", node.value)
        if isinstance(node, DistributionCall) or not (inline or self.is_dynamic(node)):
            return self.static(node, owner)
        if isinstance(node, VarRef):
            if node.name not in self.dynamic_vars:
                return self.static_var(node.name)
            self.var_sub(node.name)
            block.append((OP_CALL, None, self.var_entry[node.name], self.var_index(node.name), 0, node.pos))
            return self.var_result[node.name]
        if isinstance(node, UnaryNeg):
            a = self._as_slot(self.dyn(node.operand, block, owner, inline))
            dst = self.scratch()
            block.append((OP_NEG, dst, a, None, 0, node.pos))
            return dst
        if isinstance(node, BinaryOp):
            a = self.dyn(node.lhs, block, owner, inline)
            b = self.dyn(node.rhs, block, owner, inline)
            if a[0] == "k" and b[0] == "k":
                a = self.const_slot(a[1])
            mode = MODE_SK if b[0] == "k" else MODE_KS if a[0] == "k" else MODE_SS
            dst = self.scratch()
            block.append((_BINOPS[node.op], dst, a, b, mode, node.pos))
            return dst
        if isinstance(node, DecisionBlock):
            dst = self.scratch()
            end = self.label()
            labels = [self.label() for _ in node.options]
            col = self.model.decision_index[node.name]
            block.append((OP_SWITCH, None, col, tuple(labels), len(node.options), node.pos))
            for k, opt in enumerate(node.options):
                block.append(("label", labels[k]))
                value = self._as_slot(self.dyn(opt.body, block, owner, inline))
                block.append((OP_ALIAS, dst, value, None, 0, opt.pos))
                if k < len(node.options) - 1:
                    block.append((OP_JUMP, None, end, None, 0, opt.pos))
            block.append(("label", end))
            return dst
        raise TypeError(f"cannot compile {node!r}")

    def _as_slot(self, operand):
        return self.const_slot(operand[1]) if operand[0] == "k" else operand

    def var_index(self, name):
        return self.var_ids[name]

    def var_sub(self, name):
        if name in self.var_entry:
            return
        entry = self.label()
        self.var_ids[name] = len(self.var_entry)
        self.var_entry[name] = entry
        block = [("label", entry)]
        self.blocks.append(block)
        expr = self.model.definitions[name].expr
        result = self.dyn(expr, block, name, inline=name in self.forced)
        self.var_result[name] = self._as_slot(result)
        block.append((OP_RET, None, self.var_index(name), None, 0, self.model.definitions[name].pos))

    # -- assembly -------------------------------------------------------
    def compile(self) -> Program:
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 20 * self.model.node_count + 1000))
        try:
            main = []
            outputs = []
            for obj in self.model.objectives:
                ref = VarRef(obj.target)
                outputs.append(self._as_slot(self.dyn(ref, main, obj.target)))
            main.append((OP_HALT, None, None, None, 0, (0, 0)))
            param_slots = {}
            for name in self.model.parameters:
                param_slots[name] = self._as_slot(self.static_var(name))[1]
        finally:
            sys.setrecursionlimit(limit)
        return self._assemble([main] + self.blocks, outputs, param_slots)

    def _assemble(self, blocks, outputs, param_slots):
        n_static = len(self.static_ops)
        flat = [ins for block in blocks for ins in block]
        pcs, pc = {}, 0
        for ins in flat:
            if ins[0] == "label":
                pcs[ins[1]] = pc
            else:
                pc += 1
        n = pc
        code = np.zeros((n, 5), dtype=np.int32)
        consts = np.zeros((n, 2), dtype=np.float64)
        table = []
        positions = []

        def slot(operand):
            kind, idx = operand
            return idx if kind == "g" else n_static + idx

        i = 0
        for ins in flat:
            if ins[0] == "label":
                continue
            op, dst, a, b, aux, pos = ins
            row = code[i]
            row[0] = op
            row[4] = aux
            if op <= OP_POW:
                row[1] = slot(dst)
                if a[0] == "k":
                    consts[i, 0] = a[1]
                else:
                    row[2] = slot(a)
                if b[0] == "k":
                    consts[i, 1] = b[1]
                else:
                    row[3] = slot(b)
            elif op == OP_NEG or op == OP_ALIAS:
                row[1], row[2] = slot(dst), slot(a)
            elif op == OP_SWITCH:
                row[2] = a
                row[3] = len(table)
                table.extend(pcs[lab] for lab in b)
            elif op == OP_JUMP:
                row[2] = pcs[a]
            elif op == OP_CALL:
                row[2], row[3] = b, pcs[a]
            elif op == OP_RET:
                row[2] = a
            positions.append(pos)
            i += 1
        return Program(
            code=code,
            consts=consts,
            table=np.asarray(table, dtype=np.int32),
            outputs=np.asarray([slot(o) for o in outputs], dtype=np.int32),
            n_static=n_static,
            n_slots=n_static + self.n_scratch,
            n_vars=len(self.var_entry),
            static_ops=self.static_ops,
            positions=positions,
            param_slots=param_slots,
            forced=self.forced,
        )


def _iter(expr: Node):
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def compile_model(model: SemanticModel, forced=frozenset()) -> Program:
    return _Compiler(model, forced).compile()


def run_prelude(program: Program, plan) -> np.ndarray:
    """Compute all static slots; returns an (n_static, N) array."""
    runs = np.arange(plan.N, dtype=np.uint64)
    statics = np.empty((program.n_static, plan.N), dtype=np.float64)

    def value(operand):
        return operand[1] if operand[0] == "k" else statics[operand[1]]

    for sop in program.static_ops:
        if sop.kind == "sample":
            spec, pid = sop.args
            statics[sop.slot] = rng.sample_vector(spec, plan.root_seed, pid, runs)
        elif sop.kind == "const":
            statics[sop.slot] = sop.args[0]
        elif sop.kind == "neg":
            statics[sop.slot] = np.negative(value(sop.args[0]))
        else:
            op, a, b = sop.args
            statics[sop.slot] = apply_vector(op, value(a), value(b))
    return statics


def unstable_owners(program: Program, statics: np.ndarray) -> set:
    """Owners of static slots holding non-finite values."""
    if not program.n_static:
        return set()
    bad = ~np.isfinite(statics[: program.n_static]).all(axis=1)
    return {program.static_ops[i].owner for i in np.flatnonzero(bad)}


def prepare(model: SemanticModel, plan):
    """Compile and run the prelude, moving error-prone values out of it.

    A decision-independent value that is non-finite in some run is only an
    error if some solution actually evaluates it, so its owning variable is
    recompiled into the per-solution program, where the kernel checks it
    lazily.
    """
    forced = frozenset()
    while True:
        program = compile_model(model, forced)
        statics = run_prelude(program, plan)
        owners = unstable_owners(program, statics) - {None}
        if not owners or owners <= forced:
            return program, statics
        forced = forced | owners

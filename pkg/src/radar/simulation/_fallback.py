"""Pure-Python/NumPy interpreter for compiled programs.

Same contract as the compiled ``_kernel.run_program``: adds each solution's
objective values into ``sums[s, o, run % LANES]`` (sequential per lane),
optionally stores the raw values in ``draws`` and reports the first error
in ``err`` as ``[code, solution, run, pc]``.
"""

import numpy as np

from radar.simulation.arith import apply_vector
from radar.simulation.compiler import (
    OP_ALIAS,
    OP_CALL,
    OP_DIV,
    OP_HALT,
    OP_JUMP,
    OP_NEG,
    OP_POW,
    OP_RET,
    OP_SWITCH,
    OP_SYMBOL,
    MODE_KS,
    MODE_SK,
)

LANES = 8

ERR_NONFINITE = 1
ERR_OUTPUT = 2
ERR_INACTIVE = 3

BACKEND = "python"


def _first_bad(*arrays):
    bad = np.zeros(len(arrays[-1]), dtype=bool)
    for arr in arrays:
        if np.ndim(arr):
            bad |= ~np.isfinite(arr)
    hits = np.flatnonzero(bad)
    return int(hits[0]) if len(hits) else -1


def run_program(code, consts, table, outputs, statics, choices, sol_start, sol_stop,
                sums, draws, n_slots, n_vars, chunk, err):
    code = code.tolist()
    kcol = consts.tolist()
    table = table.tolist()
    outputs = outputs.tolist()
    n_static = statics.shape[0]
    base = [statics[i] for i in range(n_static)] + [None] * (n_slots - n_static)
    for s in range(sol_start, sol_stop):
        row = choices[s]
        vals = list(base)
        done = [False] * n_vars
        stack = []
        pc = 0
        while True:
            op, dst, a, b, aux = code[pc]
            if op <= OP_POW:
                if aux == MODE_SK:
                    x, y = vals[a], kcol[pc][1]
                elif aux == MODE_KS:
                    x, y = kcol[pc][0], vals[b]
                else:
                    x, y = vals[a], vals[b]
                out = apply_vector(OP_SYMBOL[op], x, y)
                if op >= OP_DIV:
                    run = _first_bad(x, y, out)
                    if run >= 0:
                        err[:] = (ERR_NONFINITE, s, run, pc)
                        return
                vals[dst] = out
            elif op == OP_NEG:
                vals[dst] = np.negative(vals[a])
            elif op == OP_SWITCH:
                k = int(row[a])
                if k < 0 or k >= aux:
                    err[:] = (ERR_INACTIVE, s, 0, pc)
                    return
                pc = table[b + k]
                continue
            elif op == OP_ALIAS:
                vals[dst] = vals[a]
            elif op == OP_JUMP:
                pc = a
                continue
            elif op == OP_CALL:
                if not done[a]:
                    stack.append(pc + 1)
                    pc = b
                    continue
            elif op == OP_RET:
                done[a] = True
                pc = stack.pop()
                continue
            elif op == OP_HALT:
                break
            pc += 1
        for o, slot in enumerate(outputs):
            v = vals[slot]
            pad = (-len(v)) % LANES
            if pad:
                v_l = np.concatenate([v, np.full(pad, -0.0)])
            else:
                v_l = v
            lanes = np.add.accumulate(
                np.vstack([sums[s, o][None, :], v_l.reshape(-1, LANES)]), axis=0
            )[-1]
            if not np.all(np.isfinite(lanes)):
                err[:] = (ERR_OUTPUT, s, _first_bad(v), o)
                return
            sums[s, o] = lanes
            if draws is not None:
                draws[s, o, :] = v


def pareto_indices(values):
    """Indices of rows not strictly dominated (every column maximised).

    Keeps a running front: each candidate is compared with the current
    front members only, which is O(|DS|^2) in the worst case.
    """
    values = np.asarray(values, dtype=np.float64)
    front = []
    front_vals = np.empty((0, values.shape[1]))
    for i in range(values.shape[0]):
        v = values[i]
        if len(front):
            ge = front_vals >= v
            if np.any(ge.all(axis=1) & (front_vals > v).any(axis=1)):
                continue
            keep = ~((v >= front_vals).all(axis=1) & (v > front_vals).any(axis=1))
            front = [f for f, k in zip(front, keep) if k]
            front_vals = front_vals[keep]
        front.append(i)
        front_vals = np.vstack([front_vals, v])
    return np.asarray(sorted(front), dtype=np.int64)


def bin_sums(store, rows, orders, starts):
    """Sequential per-bin sums: out[p, j, k] = sum of store[rows[j], orders[p, i]] over bin k.

    Bins are contiguous in ``orders`` and differ in size by at most one, so
    they are laid out as a padded (..., bins, size) block and accumulated
    left to right; the -0.0 padding leaves every sum unchanged.
    """
    w = np.asarray(store, dtype=np.float64)[rows]
    m, n = w.shape
    b = len(starts)
    q, r = divmod(n, b)
    g = np.take(w, orders, axis=1).transpose(1, 0, 2)  # P x M x N
    big = g[..., : r * (q + 1)].reshape(g.shape[0], m, r, q + 1)
    small = g[..., r * (q + 1):].reshape(g.shape[0], m, b - r, q)
    small = np.concatenate([small, np.full(small.shape[:-1] + (1,), -0.0)], axis=-1)
    blocks = np.concatenate([big, small], axis=2)
    seed = np.full(blocks.shape[:-1] + (1,), -0.0)
    return np.add.accumulate(np.concatenate([seed, blocks], axis=-1), axis=-1)[..., -1]


def binned_gain(store, rows, orders, starts):
    """Per parameter: (sum over bins of the best bin total, best overall total)."""
    sums = bin_sums(store, rows, orders, starts)  # P x M x B
    inner = np.add.accumulate(sums.max(axis=1), axis=1)[:, -1]
    outer = np.add.accumulate(sums, axis=2)[..., -1].max(axis=1)
    return np.stack([inner, outer], axis=1)


def evtpi_sums(store, rows):
    """(sum of per-run maxima, largest strategy sum), both summed sequentially."""
    w = np.asarray(store, dtype=np.float64)[rows]
    top = np.add.accumulate(w.max(axis=0))[-1]
    best = np.add.accumulate(w, axis=1)[:, -1].max()
    return float(top), float(best)

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled interpreter for simulation programs and the Pareto filter.

Mirrors ``radar.simulation._fallback`` exactly; see that module for the
calling convention.
"""

from libc.math cimport pow, isfinite
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

import numpy as np

cdef enum:
    OP_ADD = 0
    OP_SUB = 1
    OP_MUL = 2
    OP_DIV = 3
    OP_POW = 4
    OP_NEG = 5
    OP_SWITCH = 6
    OP_ALIAS = 7
    OP_JUMP = 8
    OP_CALL = 9
    OP_RET = 10
    OP_HALT = 11
    MODE_SK = 1
    MODE_KS = 2
    LANES = 8

BACKEND = "cython"


cdef inline Py_ssize_t _first_bad(const double* x, const double* y, const double* z,
                                  Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        if (x != NULL and not isfinite(x[i])) or (y != NULL and not isfinite(y[i])) \
                or not isfinite(z[i]):
            return i
    return -1


cdef int _binop(int op, int mode, double* d, const double* x, const double* y,
                double kx, double ky, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    if op == OP_ADD:
        if mode == MODE_SK:
            for i in range(n):
                d[i] = x[i] + ky
        elif mode == MODE_KS:
            for i in range(n):
                d[i] = kx + y[i]
        else:
            for i in range(n):
                d[i] = x[i] + y[i]
    elif op == OP_SUB:
        if mode == MODE_SK:
            for i in range(n):
                d[i] = x[i] - ky
        elif mode == MODE_KS:
            for i in range(n):
                d[i] = kx - y[i]
        else:
            for i in range(n):
                d[i] = x[i] - y[i]
    elif op == OP_MUL:
        if mode == MODE_SK:
            for i in range(n):
                d[i] = x[i] * ky
        elif mode == MODE_KS:
            for i in range(n):
                d[i] = kx * y[i]
        else:
            for i in range(n):
                d[i] = x[i] * y[i]
    elif op == OP_DIV:
        if mode == MODE_SK:
            for i in range(n):
                d[i] = x[i] / ky
        elif mode == MODE_KS:
            for i in range(n):
                d[i] = kx / y[i]
        else:
            for i in range(n):
                d[i] = x[i] / y[i]
    else:
        if mode == MODE_SK:
            for i in range(n):
                d[i] = pow(x[i], ky)
        elif mode == MODE_KS:
            for i in range(n):
                d[i] = pow(kx, y[i])
        else:
            for i in range(n):
                d[i] = pow(x[i], y[i])
    return 0


cdef int _run(const int[:, ::1] code, const double[:, ::1] consts, const int[::1] table,
              const int[::1] outputs, const double[:, ::1] statics,
              const int[:, ::1] choices, Py_ssize_t sol_start, Py_ssize_t sol_stop,
              double[:, :, ::1] sums, double* draws, Py_ssize_t n_slots, Py_ssize_t n_vars,
              Py_ssize_t chunk, long long* err) noexcept nogil:
    cdef Py_ssize_t N = statics.shape[1]
    cdef Py_ssize_t n_static = statics.shape[0]
    cdef Py_ssize_t n_obj = outputs.shape[0]
    cdef Py_ssize_t n_scratch = n_slots - n_static
    cdef double** ptr = <double**> malloc(n_slots * sizeof(double*))
    cdef double* scratch = <double*> malloc((n_scratch * chunk + 1) * sizeof(double))
    cdef char* done = <char*> malloc(n_vars + 1)
    cdef int* stack = <int*> malloc((n_vars + 1) * sizeof(int))
    cdef Py_ssize_t start, L, s, i, o, pc, bad, lane
    cdef int op, dst, a, b, aux, k, sp
    cdef double acc[LANES]
    cdef double* v
    cdef const double* x
    cdef const double* y
    cdef int status = 0
    if ptr == NULL or scratch == NULL or done == NULL or stack == NULL:
        status = -1
    start = 0
    while status == 0 and start < N:
        L = chunk if N - start > chunk else N - start
        for i in range(n_static):
            ptr[i] = <double*> &statics[i, start]
        for s in range(sol_start, sol_stop):
            for i in range(n_scratch):
                ptr[n_static + i] = scratch + i * chunk
            memset(done, 0, n_vars + 1)
            sp = 0
            pc = 0
            while True:
                op = code[pc, 0]
                dst = code[pc, 1]
                a = code[pc, 2]
                b = code[pc, 3]
                aux = code[pc, 4]
                if op <= OP_POW:
                    x = NULL if aux == MODE_KS else ptr[a]
                    y = NULL if aux == MODE_SK else ptr[b]
                    _binop(op, aux, ptr[dst], x, y, consts[pc, 0], consts[pc, 1], L)
                    if op >= OP_DIV:
                        bad = _first_bad(x, y, ptr[dst], L)
                        if bad >= 0:
                            err[0] = 1
                            err[1] = s
                            err[2] = start + bad
                            err[3] = pc
                            status = 1
                            break
                elif op == OP_NEG:
                    x = ptr[a]
                    v = ptr[dst]
                    for i in range(L):
                        v[i] = -x[i]
                elif op == OP_SWITCH:
                    k = choices[s, a]
                    if k < 0 or k >= aux:
                        err[0] = 3
                        err[1] = s
                        err[2] = start
                        err[3] = pc
                        status = 1
                        break
                    pc = table[b + k]
                    continue
                elif op == OP_ALIAS:
                    ptr[dst] = ptr[a]
                elif op == OP_JUMP:
                    pc = a
                    continue
                elif op == OP_CALL:
                    if not done[a]:
                        stack[sp] = pc + 1
                        sp += 1
                        pc = b
                        continue
                elif op == OP_RET:
                    done[a] = 1
                    sp -= 1
                    pc = stack[sp]
                    continue
                else:
                    break
                pc += 1
            if status:
                break
            for o in range(n_obj):
                v = ptr[outputs[o]]
                for lane in range(LANES):
                    acc[lane] = sums[s, o, lane]
                # lane = global run index mod LANES (chunk is a multiple of LANES)
                i = 0
                while i + LANES <= L:
                    for lane in range(LANES):
                        acc[lane] = acc[lane] + v[i + lane]
                    i += LANES
                for lane in range(L - i):
                    acc[lane] = acc[lane] + v[i + lane]
                bad = 0
                for lane in range(LANES):
                    if not isfinite(acc[lane]):
                        bad = 1
                if bad:
                    err[0] = 2
                    err[1] = s
                    err[2] = start + _first_bad(NULL, NULL, v, L)
                    err[3] = o
                    status = 1
                    break
                for lane in range(LANES):
                    sums[s, o, lane] = acc[lane]
                if draws != NULL:
                    memcpy(draws + (s * n_obj + o) * N + start, v, L * sizeof(double))
            if status:
                break
        start += L
    free(ptr)
    free(scratch)
    free(done)
    free(stack)
    return status


def run_program(code, consts, table, outputs, statics, choices, Py_ssize_t sol_start,
                Py_ssize_t sol_stop, sums, draws, Py_ssize_t n_slots, Py_ssize_t n_vars,
                Py_ssize_t chunk, err):
    cdef const int[:, ::1] c_code = code
    cdef const double[:, ::1] c_consts = consts
    cdef const int[::1] c_table = table if len(table) else np.zeros(1, dtype=np.int32)
    cdef const int[::1] c_outputs = outputs
    cdef const double[:, ::1] c_statics = statics
    cdef const int[:, ::1] c_choices = choices
    cdef double[:, :, ::1] c_sums = sums
    cdef double[:, :, ::1] c_draws
    cdef long long[::1] c_err = err
    cdef double* draws_ptr = NULL
    cdef int status
    chunk = max(LANES, chunk - chunk % LANES)
    if draws is not None:
        c_draws = draws
        if c_draws.shape[0] and c_draws.shape[1] and c_draws.shape[2]:
            draws_ptr = &c_draws[0, 0, 0]
    with nogil:
        status = _run(c_code, c_consts, c_table, c_outputs, c_statics, c_choices,
                      sol_start, sol_stop, c_sums, draws_ptr, n_slots, n_vars, chunk,
                      &c_err[0])
    if status < 0:
        raise MemoryError("kernel scratch allocation failed")


def pareto_indices(values):
    """Indices of rows not strictly dominated (every column maximised)."""
    cdef const double[:, ::1] vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t n = vals.shape[0]
    cdef Py_ssize_t m = vals.shape[1]
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] front = out
    cdef Py_ssize_t size = 0, i, j, c, w
    cdef bint ge, gt, i_ge, i_gt, dominated
    with nogil:
        for i in range(n):
            dominated = False
            for j in range(size):
                ge = True
                gt = False
                for c in range(m):
                    if vals[front[j], c] < vals[i, c]:
                        ge = False
                        break
                    if vals[front[j], c] > vals[i, c]:
                        gt = True
                if ge and gt:
                    dominated = True
                    break
            if dominated:
                continue
            w = 0
            for j in range(size):
                i_ge = True
                i_gt = False
                for c in range(m):
                    if vals[i, c] < vals[front[j], c]:
                        i_ge = False
                        break
                    if vals[i, c] > vals[front[j], c]:
                        i_gt = True
                if not (i_ge and i_gt):
                    front[w] = front[j]
                    w += 1
            size = w
            front[size] = i
            size += 1
    return np.sort(out[:size])


def _rows_contiguous(store):
    # rows may be strided (slices of retained draws); runs must be adjacent
    store = np.asarray(store, dtype=np.float64)
    return store if store.strides[1] == sizeof(double) else np.ascontiguousarray(store)


cdef inline const double* _row(const double[:, :] w, const long long[::1] rows,
                               Py_ssize_t j) noexcept nogil:
    return &w[rows[j], 0]


def binned_gain(store, rows, orders, starts):
    """Per parameter p: (sum over bins of the best bin total, best overall total).

    Strategy j is ``store[rows[j]]``. Bin totals are sequential sums in
    ``orders[p]`` order; both outer sums run over bins left to right.
    """
    cdef const double[:, :] w = _rows_contiguous(store)
    cdef const long long[::1] rw = np.ascontiguousarray(rows, dtype=np.int64)
    cdef const long long[:, ::1] idx = np.ascontiguousarray(orders, dtype=np.int64)
    cdef const long long[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t P = idx.shape[0], M = rw.shape[0], N = w.shape[1], B = st.shape[0]
    out = np.empty((P, 2))
    cdef double[:, ::1] o = out
    buf = np.empty((M, B))
    cdef double[:, ::1] S = buf
    cdef Py_ssize_t p, j, k, i, lo, hi
    cdef const long long* order
    cdef const double* r0
    cdef const double* r1
    cdef const double* r2
    cdef const double* r3
    cdef long long t
    cdef double a0, a1, a2, a3, inner, outer, best
    with nogil:
        for p in range(P):
            order = &idx[p, 0]
            j = 0
            # four strategies per pass: independent chains hide the add latency
            while j < M:
                r0 = _row(w, rw, j)
                r1 = _row(w, rw, j + 1) if j + 1 < M else r0
                r2 = _row(w, rw, j + 2) if j + 2 < M else r0
                r3 = _row(w, rw, j + 3) if j + 3 < M else r0
                for k in range(B):
                    lo = st[k]
                    hi = st[k + 1] if k + 1 < B else N
                    a0 = -0.0
                    a1 = -0.0
                    a2 = -0.0
                    a3 = -0.0
                    for i in range(lo, hi):
                        t = order[i]
                        a0 = a0 + r0[t]
                        a1 = a1 + r1[t]
                        a2 = a2 + r2[t]
                        a3 = a3 + r3[t]
                    S[j, k] = a0
                    if j + 1 < M:
                        S[j + 1, k] = a1
                    if j + 2 < M:
                        S[j + 2, k] = a2
                    if j + 3 < M:
                        S[j + 3, k] = a3
                j += 4
            inner = -0.0
            for k in range(B):
                best = S[0, k]
                for j in range(1, M):
                    if S[j, k] > best:
                        best = S[j, k]
                inner = inner + best
            outer = 0.0
            for j in range(M):
                a0 = -0.0
                for k in range(B):
                    a0 = a0 + S[j, k]
                if j == 0 or a0 > outer:
                    outer = a0
            o[p, 0] = inner
            o[p, 1] = outer
    return out


def evtpi_sums(store, rows):
    """(sum of per-run maxima, largest strategy sum), both summed sequentially.

    Strategy j is ``store[rows[j]]``.
    """
    cdef const double[:, :] w = _rows_contiguous(store)
    cdef const long long[::1] rw = np.ascontiguousarray(rows, dtype=np.int64)
    cdef Py_ssize_t M = rw.shape[0], N = w.shape[1], i, j
    cdef double top = -0.0, best = 0.0, a0, a1, a2, a3
    cdef const double* r0
    cdef const double* r1
    cdef const double* r2
    cdef const double* r3
    rowmax = np.array(store[rows[0]], dtype=np.float64)
    cdef double[::1] rm = rowmax
    col = np.empty(M)
    cdef double[::1] sums = col
    with nogil:
        for j in range(1, M):
            r0 = _row(w, rw, j)
            for i in range(N):
                rm[i] = r0[i] if r0[i] > rm[i] else rm[i]
        for i in range(N):
            top = top + rm[i]
        j = 0
        while j < M:
            r0 = _row(w, rw, j)
            r1 = _row(w, rw, j + 1) if j + 1 < M else r0
            r2 = _row(w, rw, j + 2) if j + 2 < M else r0
            r3 = _row(w, rw, j + 3) if j + 3 < M else r0
            a0 = -0.0
            a1 = -0.0
            a2 = -0.0
            a3 = -0.0
            for i in range(N):
                a0 = a0 + r0[i]
                a1 = a1 + r1[i]
                a2 = a2 + r2[i]
                a3 = a3 + r3[i]
            sums[j] = a0
            if j + 1 < M:
                sums[j + 1] = a1
            if j + 2 < M:
                sums[j + 2] = a2
            if j + 3 < M:
                sums[j + 3] = a3
            j += 4
        best = sums[0]
        for j in range(1, M):
            if sums[j] > best:
                best = sums[j]
    return top, best

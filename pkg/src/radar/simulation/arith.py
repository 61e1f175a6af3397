"""Scalar and vector arithmetic with identical IEEE-754 results.

``pow`` always goes through the C library (``math.pow``) so that the scalar
oracle, the NumPy fallback and the compiled kernel agree bit for bit.
"""

import math

import numpy as np


def _pow(x, y):
    try:
        return math.pow(x, y)
    except ValueError:
        return math.nan
    except OverflowError:
        return math.inf


def apply_scalar(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            if a == 0.0 or math.isnan(a):
                return math.nan
            return math.copysign(math.inf, a) * math.copysign(1.0, b)
        return a / b
    if op == "^":
        return _pow(a, b)
    raise ValueError(f"unknown operator {op!r}")


_vpow = np.frompyfunc(_pow, 2, 1)


def apply_vector(op, a, b):
    """Elementwise ``a op b``; either side may be a Python float."""
    with np.errstate(all="ignore"):
        if op == "+":
            return np.add(a, b)
        if op == "-":
            return np.subtract(a, b)
        if op == "*":
            return np.multiply(a, b)
        if op == "/":
            return np.divide(a, b)
        if op == "^":
            a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
            return _vpow(a_arr, b_arr).astype(np.float64)
    raise ValueError(f"unknown operator {op!r}")

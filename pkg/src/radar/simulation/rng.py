"""Counter-based uniform draws keyed by (seed, parameter id, run index).

Every draw is a pure function of its key, so any subset of runs can be
regenerated in any order and by any number of workers with identical
results. The mixing function is the SplitMix64 finaliser applied twice.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from radar.errors import InvalidDistribution

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB


@dataclass(frozen=True)
class RandomPlan:
    root_seed: int
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        object.__setattr__(self, "root_seed", int(self.root_seed) & _M64)


def param_id(key: str) -> int:
    """Stable 64-bit id of a parameter key (survives model re-ordering)."""
    return int.from_bytes(hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest(), "little")


def _mix_int(z):
    z &= _M64
    z = ((z ^ (z >> 30)) * _C1) & _M64
    z = ((z ^ (z >> 27)) * _C2) & _M64
    return z ^ (z >> 31)


def _mix_array(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_C1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_C2)
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, pid: int) -> int:
    return _mix_int((seed & _M64) ^ _mix_int(pid + _GOLDEN))


def uniforms(seed: int, pid: int, runs) -> np.ndarray:
    """Uniform draws on the open interval (0, 1) for the given run indices."""
    key = stream_key(seed, pid)
    runs = np.asarray(runs, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (runs + np.uint64(1)) * np.uint64(_GOLDEN) + np.uint64(key)
        z = _mix_array(_mix_array(z) ^ np.uint64(key))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def transform(kind: str, args, u: np.ndarray) -> np.ndarray:
    """Map uniforms to draws of the named distribution by inverse CDF."""
    if kind == "deterministic":
        return np.full(u.shape, float(args[0]))
    if kind == "normal":
        mean, sd = args
        return mean + sd * ndtri(u)
    if kind == "uniform":
        lo, hi = args
        return lo + (hi - lo) * u
    if kind == "triangular":
        lo, mode, hi = args
        width = hi - lo
        cut = (mode - lo) / width
        left = lo + np.sqrt(u * width * (mode - lo))
        right = hi - np.sqrt((1.0 - u) * width * (hi - mode))
        return np.where(u < cut, left, right)
    if kind == "exponential":
        (rate,) = args
        return -np.log1p(-u) / rate
    raise InvalidDistribution(f"unknown distribution {kind!r}")


def sample_vector(spec, seed: int, pid: int, runs) -> np.ndarray:
    return transform(spec.kind, spec.args, uniforms(seed, pid, runs))


def sample(spec, plan: RandomPlan, pid: int, run_index: int) -> float:
    """One draw; bitwise equal to element ``run_index`` of the vector path."""
    if not 0 <= run_index < plan.N:
        raise IndexError(f"run index {run_index} outside 0..{plan.N - 1}")
    return float(sample_vector(spec, plan.root_seed, pid, [run_index])[0])

"""Pareto shortlisting and value-of-information analysis."""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from radar.designspace import DEFAULT_CAP, DesignSpace, enumerate_design_space
from radar.errors import BenchmarkTimeout, ConfigError, LengthMismatch
from radar.instrument import StepRecorder, StepTimings
from radar.simulation import backend as _backend
from radar.simulation.engine import (
    AUTO,
    DEFAULT_MEMORY_BUDGET,
    Engine,
    NbMatrix,
    SimulationResult,
    nb_matrix,
    resolve_mode,
    simulate,
)

MAX = "Max"
MIN = "Min"
NEG_CLAMP = 1e-12
# gathered elements per block while estimating EVPPI
_GATHER_ELEMENTS = 1 << 20


def _signs(dirs) -> np.ndarray:
    out = []
    for d in dirs:
        if d not in (MAX, MIN):
            raise ValueError(f"direction must be 'Max' or 'Min', got {d!r}")
        out.append(1.0 if d == MAX else -1.0)
    return np.asarray(out)


def dominates(a, b, dirs) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and better somewhere."""
    s = _signs(dirs)
    a = np.asarray(a, dtype=float) * s
    b = np.asarray(b, dtype=float) * s
    if a.shape != b.shape or a.shape != s.shape:
        raise LengthMismatch("mean vectors and directions must have equal length")
    return bool(np.all(a >= b) and np.any(a > b))


@dataclass(frozen=True)
class ParetoFront:
    indices: tuple

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


def pareto_shortlist(means, dirs, backend=None) -> ParetoFront:
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2 or means.shape[0] < 1:
        raise ValueError("means must be a non-empty |DS| x |Obj| matrix")
    signs = _signs(dirs)
    if signs.shape[0] != means.shape[1]:
        raise LengthMismatch("one direction per objective column required")
    kernel = _backend.get(backend)
    idx = kernel.pareto_indices(np.ascontiguousarray(means * signs))
    return ParetoFront(tuple(int(i) for i in idx))


def _strategies(nb):
    """(store, rows): strategy j of the NB matrix is ``store[rows[j]]``."""
    if not isinstance(nb, NbMatrix):
        v = np.asarray(nb, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("NB matrix must be N x M with N, M >= 1")
        nb = NbMatrix.from_values(v, range(v.shape[1]), "")
    return nb.store, nb.rows


def _clamp(value):
    return 0.0 if -NEG_CLAMP <= value < 0.0 else value


def evtpi(nb, backend=None) -> float:
    """Mean of per-run maxima minus the maximum of per-strategy means."""
    store, rows = _strategies(nb)
    m, n = len(rows), store.shape[1]
    if m == 1:
        return 0.0
    # same sequential reduction for both terms: a dominating strategy cancels exactly
    top, best = _backend.get(backend).evtpi_sums(store, rows)
    return _clamp(top / n - best / n)


def default_bin_count(n: int) -> int:
    return math.isqrt(n - 1) + 1 if n > 1 else 1


@functools.lru_cache(maxsize=64)
def _starts(n, bin_count):
    q, r = divmod(n, bin_count)
    sizes = np.full(bin_count, q, dtype=np.int64)
    sizes[:r] += 1
    out = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    out.setflags(write=False)
    return out


def bin_starts(n: int, bin_count: int) -> np.ndarray:
    """First run index of each of ``bin_count`` near-equal contiguous bins."""
    return _starts(int(n), int(bin_count))


def _stable_orders(xs):
    """Row-wise stable argsort (ties keep run order)."""
    orders = np.empty(xs.shape, dtype=np.int64)
    for p, x in enumerate(xs):
        if x[0] == x[-1] and x.min() == x.max():
            orders[p] = np.arange(len(x))
            continue
        o = np.argsort(x)
        r = x[o]
        # the fast sort is only ambiguous where values repeat
        orders[p] = np.argsort(x, kind="stable") if (r[1:] == r[:-1]).any() else o
    return orders


def evppi_many(nb, xs, bin_count: Optional[int] = None, backend=None) -> np.ndarray:
    """Raw binning estimates for each row of ``xs`` (P x N parameter draws).

    Runs are sorted by the parameter (stable), cut into ``bin_count``
    contiguous bins whose sizes differ by at most one, and the estimate is
    the summed best-strategy bin totals minus the best overall strategy
    total, both divided by N.
    """
    store, rows = _strategies(nb)
    m, n = len(rows), store.shape[1]
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[None, :]
    if xs.shape[1] != n:
        raise LengthMismatch(f"parameter vector has {xs.shape[1]} entries, NB matrix has {n} rows")
    b = default_bin_count(n) if bin_count is None else int(bin_count)
    if b < 1:
        raise ValueError("bin_count must be >= 1")
    b = min(b, n)
    starts = bin_starts(n, b)
    kernel = _backend.get(backend)
    out = np.empty(xs.shape[0])
    step = max(1, _GATHER_ELEMENTS // (m * n))
    for lo in range(0, xs.shape[0], step):
        orders = _stable_orders(xs[lo:lo + step])
        gain = kernel.binned_gain(store, rows, orders, starts)
        out[lo:lo + step] = gain[:, 0] / n - gain[:, 1] / n
    return out


def evppi_raw(nb, x, bin_count: Optional[int] = None) -> float:
    """Binning estimate of the value of learning the parameter ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a vector")
    return float(evppi_many(nb, x[None, :], bin_count)[0])


def evppi(nb, x, bin_count: Optional[int] = None) -> float:
    return _clamp(evppi_raw(nb, x, bin_count))


@dataclass
class VoiReport:
    objective: str
    evtpi: float
    evppi: dict  # parameter -> raw estimate
    N: int
    S: int
    bin_count: int

    def evppi_clamped(self) -> dict:
        return {k: max(0.0, v) for k, v in self.evppi.items()}

    def ranked(self):
        """(parameter, raw, clamped) sorted by estimate, largest first."""
        items = sorted(self.evppi.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(k, v, max(0.0, v)) for k, v in items]


def value_of_information(nb: NbMatrix, params: dict, bin_count=None, maximize=True,
                         backend=None) -> VoiReport:
    """EVTPI and per-parameter EVPPI; Min objectives are negated first."""
    values = nb if maximize else NbMatrix(-nb.store[nb.rows], np.arange(nb.M), nb.solution_ids, nb.objective)
    n = values.N
    b = default_bin_count(n) if bin_count is None else min(int(bin_count), n)
    names = list(params)
    raw = evppi_many(values, np.array([params[k] for k in names]).reshape(len(names), n), b, backend)
    return VoiReport(
        objective=nb.objective,
        evtpi=evtpi(values, backend),
        evppi={name: float(v) for name, v in zip(names, raw)},
        N=n,
        S=values.M,
        bin_count=b,
    )


@dataclass
class AnalysisConfig:
    mode: str = AUTO
    workers: int = 1
    bin_count: Optional[int] = None
    voi_objectives: Optional[Sequence[str]] = None  # default: first declared
    parameters: Optional[Sequence[str]] = None  # default: every parameter
    cap: int = DEFAULT_CAP
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    time_budget: Optional[float] = None
    backend: Optional[str] = None


@dataclass
class AnalysisResult:
    design_space: DesignSpace
    simulation: SimulationResult
    front: ParetoFront
    voi: list
    timings: StepTimings = field(repr=False)

    @property
    def means(self) -> np.ndarray:
        return self.simulation.means


def run_analysis(model, plan, config: AnalysisConfig = None, recorder: StepRecorder = None) -> AnalysisResult:
    config = config or AnalysisConfig()
    deadline = None if config.time_budget is None else time.monotonic() + config.time_budget
    recorder = recorder or StepRecorder(deadline)
    names = [o.name for o in model.objectives]
    targets = list(config.voi_objectives) if config.voi_objectives else names[:1]
    for t in targets:
        if t not in names:
            raise ConfigError(f"unknown objective {t!r}")
    params = list(model.parameters) if config.parameters is None else list(config.parameters)
    for p in params:
        if p not in model.parameters:
            raise ConfigError(f"{p!r} is not a parameter of the model")

    def check_deadline():
        if deadline is not None and time.monotonic() > deadline:
            raise BenchmarkTimeout("analysis exceeded its wall-clock budget")

    with recorder.step("design_space"):
        ds = enumerate_design_space(model, cap=config.cap)
    check_deadline()
    with recorder.step("simulation"):
        # fail on the memory budget before any per-run arrays are allocated
        mode = resolve_mode(config.mode, ds.size, len(model.objectives), plan.N, config.memory_budget)
        engine = Engine(model, plan, config.backend)
        sim = simulate(model, ds, plan, mode, workers=config.workers,
                       memory_budget=config.memory_budget, deadline=deadline, engine=engine)
    check_deadline()
    with recorder.step("shortlist"):
        dirs = [o.direction for o in model.objectives]
        front = pareto_shortlist(sim.means, dirs, config.backend) if names else ParetoFront((0,))
    check_deadline()
    reports = []
    with recorder.step("voi"):
        draws = {p: engine.parameter_draws(p) for p in params}
        for t in targets:
            nb = nb_matrix(model, front.indices, plan, t, result=sim, workers=config.workers)
            obj = model.objectives[names.index(t)]
            reports.append(value_of_information(nb, draws, config.bin_count, obj.maximize, config.backend))
    return AnalysisResult(ds, sim, front, reports, recorder.timings)

"""Monte Carlo simulation of every solution in a design space."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from radar.designspace import DesignSpace
from radar.errors import AnalysisError, BenchmarkTimeout, CapacityError, NumericError
from radar.simulation import backend as _backend
from radar.simulation import rng
from radar.simulation.compiler import prepare
from radar.simulation.evaluate import evaluate_run
from radar.simulation.rng import RandomPlan

FULL = "full"
STREAMING = "streaming"
AUTO = "auto"
AUTO_STREAMING_BYTES = 1 << 30
DEFAULT_MEMORY_BUDGET = 2 << 30
CHUNK = 512
BATCH = 2048
LANES = 8


def new_accumulator(n_solutions, n_objectives):
    return np.full((n_solutions, n_objectives, LANES), -0.0)


def fold(lanes):
    """Combine per-lane partial sums in a fixed pairwise order."""
    t = lanes
    while t.shape[-1] > 1:
        t = t[..., 0::2] + t[..., 1::2]
    return t[..., 0]


@dataclass
class SimulationResult:
    objective_names: tuple
    directions: tuple
    solutions: DesignSpace
    means: np.ndarray  # |DS| x |Obj|
    draws: Optional[np.ndarray]  # |DS| x |Obj| x N, FullRetention only
    plan: RandomPlan
    mode: str
    engine: "Engine" = field(repr=False, default=None)


class NbMatrix:
    """N x M net-benefit draws over the shortlisted solutions.

    Stored strategy-major: column ``j`` is row ``rows[j]`` of ``store``
    (shape K x N, rows contiguous), so slicing retained draws copies nothing.
    """

    def __init__(self, store, rows, solution_ids, objective):
        store = np.asarray(store, dtype=np.float64)
        if store.ndim != 2 or store.strides[1] != store.itemsize:
            store = np.ascontiguousarray(store)
        self.store = store
        self.rows = np.ascontiguousarray(rows, dtype=np.int64)
        self.solution_ids = tuple(solution_ids)
        self.objective = objective
        if len(self.rows) < 1 or store.shape[1] < 1:
            raise ValueError("NB matrix needs at least one run and one column")
        if len(self.solution_ids) != len(self.rows):
            raise ValueError("one solution id per column required")

    @classmethod
    def from_values(cls, values, solution_ids, objective):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("NB values must be an N x M matrix")
        return cls(values.T, np.arange(values.shape[1]), solution_ids, objective)

    @property
    def values(self) -> np.ndarray:
        return self.store[self.rows].T

    @property
    def N(self):
        return self.store.shape[1]

    @property
    def M(self):
        return len(self.rows)

    def __repr__(self):
        return f"NbMatrix(objective={self.objective!r}, N={self.N}, M={self.M})"


def projected_bytes(n_solutions, n_objectives, N):
    return int(n_solutions) * int(n_objectives) * int(N) * 8


def resolve_mode(mode, n_solutions, n_objectives, N, memory_budget=DEFAULT_MEMORY_BUDGET):
    need = projected_bytes(n_solutions, n_objectives, N)
    if mode == AUTO:
        mode = STREAMING if need > AUTO_STREAMING_BYTES else FULL
    if mode not in (FULL, STREAMING):
        raise ValueError(f"unknown simulation mode {mode!r}")
    if mode == FULL and need > memory_budget:
        raise CapacityError(
            f"full retention needs {need} bytes, above the memory budget of {memory_budget}"
        )
    return mode


class Engine:
    """Compiled model plus its decision-independent values for one plan."""

    def __init__(self, model, plan: RandomPlan, backend=None):
        self.model = model
        self.plan = plan
        self.kernel = _backend.get(backend)
        try:
            self.program, self.statics = prepare(model, plan)
        except MemoryError:
            raise CapacityError(f"not enough memory for the per-run values of N = {plan.N} runs") from None

    def parameter_draws(self, name) -> np.ndarray:
        slot = self.program.param_slots.get(name)
        if slot is not None:
            return self.statics[slot]
        spec = self.model.parameter_spec(name)
        return rng.sample_vector(spec, self.plan.root_seed, rng.param_id(name), np.arange(self.plan.N))

    def run(self, choices, sums, draws=None, workers=1, deadline=None, labels=None):
        """Simulate the rows of ``choices``; accumulate into ``sums``/``draws``.

        ``sums`` holds per-lane partial sums, see :func:`fold`.
        """
        n = choices.shape[0]
        workers = max(1, min(int(workers), n))
        bounds = np.linspace(0, n, workers + 1).astype(int)
        parts = [(int(bounds[i]), int(bounds[i + 1])) for i in range(workers)]

        def work(part):
            err = np.zeros(4, dtype=np.int64)
            lo, hi = part
            for start in range(lo, hi, BATCH):
                if deadline is not None and time.monotonic() > deadline:
                    return ("timeout", start)
                self._call(choices, start, min(start + BATCH, hi), sums, draws, err)
                if err[0]:
                    return ("error", err)
            return None

        if workers == 1:
            outcomes = [work(parts[0])]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(work, parts))
        errors = [o for o in outcomes if o is not None]
        if not errors:
            return
        failed = [e[1] for e in errors if e[0] == "error"]
        if failed:
            first = min(failed, key=lambda e: e[1])
            self._raise(first, choices, labels)
        raise BenchmarkTimeout("simulation exceeded its wall-clock budget")

    def _call(self, choices, lo, hi, sums, draws, err):
        p = self.program
        self.kernel.run_program(
            p.code, p.consts, p.table, p.outputs, self.statics, choices, lo, hi,
            sums, draws, p.n_slots, p.n_vars, CHUNK, err,
        )

    def _raise(self, err, choices, labels):
        code, s, run, where = (int(v) for v in err)
        solution = labels(s) if labels else s
        if code == 1:
            line, col = self.program.positions[where]
            raise NumericError("non-finite value", solution=solution.label() if hasattr(solution, "label") else s,
                               run=run, line=line, col=col)
        if code == 3:
            raise AnalysisError(f"inactive decision evaluated for solution {s}")
        # non-finite objective: let the reference evaluator locate the node
        if hasattr(solution, "bindings"):
            evaluate_run(self.model, solution, self.plan, run)
        obj = self.model.objectives[where]
        raise NumericError(f"objective '{obj.name}' is not finite", solution=s, run=run)


def simulate(model, ds: DesignSpace, plan: RandomPlan, mode: str = AUTO, *, workers: int = 1,
             memory_budget: int = DEFAULT_MEMORY_BUDGET, backend=None, deadline=None,
             engine: Engine | None = None) -> SimulationResult:
    n_obj = len(model.objectives)
    if ds.size < 1:
        raise ValueError("design space is empty")
    mode = resolve_mode(mode, ds.size, n_obj, plan.N, memory_budget)
    engine = engine or Engine(model, plan, backend)
    sums = new_accumulator(ds.size, n_obj)
    draws = np.empty((ds.size, n_obj, plan.N)) if mode == FULL else None
    engine.run(ds.choices, sums, draws, workers=workers, deadline=deadline, labels=ds.solution)
    return SimulationResult(
        objective_names=tuple(o.name for o in model.objectives),
        directions=tuple(o.direction for o in model.objectives),
        solutions=ds,
        means=fold(sums) / plan.N,
        draws=draws,
        plan=plan,
        mode=mode,
        engine=engine,
    )


def nb_matrix(model, shortlist, plan: RandomPlan, objective: str, *, result: SimulationResult = None,
              design_space: DesignSpace = None, workers: int = 1, backend=None) -> NbMatrix:
    """N x |S| simulations of ``objective`` for the shortlisted solutions.

    Sliced from retained draws when available, otherwise regenerated from
    the same random plan; both paths give identical matrices.
    """
    shortlist = [int(i) for i in shortlist]
    if not shortlist:
        raise ValueError("shortlist must not be empty")
    names = [o.name for o in model.objectives]
    if objective not in names:
        raise KeyError(f"unknown objective {objective!r}")
    o = names.index(objective)
    if result is not None and result.draws is not None:
        return NbMatrix(result.draws[:, o, :], shortlist, shortlist, objective)
    ds = design_space if design_space is not None else (result.solutions if result else None)
    if ds is None:
        from radar.designspace import enumerate_design_space

        ds = enumerate_design_space(model)
    engine = result.engine if result is not None and result.engine is not None else Engine(model, plan, backend)
    choices = np.ascontiguousarray(ds.choices[shortlist])
    sums = new_accumulator(len(shortlist), len(names))
    draws = np.empty((len(shortlist), len(names), plan.N))
    engine.run(choices, sums, draws, workers=workers, labels=lambda i: ds.solution(shortlist[i]))
    return NbMatrix(draws[:, o, :], np.arange(len(shortlist)), shortlist, objective)

"""Per-step wall time and memory accounting for the analysis pipeline."""

from __future__ import annotations

import time
import tracemalloc
from contextlib import contextmanager
from dataclasses import dataclass, field

import psutil

STEPS = ("design_space", "simulation", "shortlist", "voi")


@dataclass
class StepTimings:
    """Seconds and peak incremental bytes per step.

    ``bytes`` comes from the allocator (only populated while tracemalloc
    is tracing); ``rss`` is the growth of the process resident set over
    the step, kept as a cross-check.
    """

    seconds: dict = field(default_factory=lambda: dict.fromkeys(STEPS, 0.0))
    bytes: dict = field(default_factory=lambda: dict.fromkeys(STEPS, 0))
    rss: dict = field(default_factory=lambda: dict.fromkeys(STEPS, 0))

    @property
    def total_seconds(self) -> float:
        return sum(self.seconds.values())

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes.values())

    def time_shares(self) -> dict:
        return _shares(self.seconds)

    def memory_shares(self) -> dict:
        return _shares(self.bytes)


def _shares(values):
    total = sum(values.values())
    if total <= 0:
        return {k: 100.0 / len(values) for k in values}
    return {k: 100.0 * v / total for k, v in values.items()}


class StepRecorder:
    def __init__(self, deadline=None):
        self.timings = StepTimings()
        self.deadline = deadline
        self._proc = psutil.Process()

    @contextmanager
    def step(self, name):
        tracing = tracemalloc.is_tracing()
        if tracing:
            base = tracemalloc.get_traced_memory()[0]
            tracemalloc.reset_peak()
        rss0 = self._proc.memory_info().rss
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings.seconds[name] += time.perf_counter() - t0
            self.timings.rss[name] = max(self.timings.rss[name], self._proc.memory_info().rss - rss0, 0)
            if tracing:
                peak = tracemalloc.get_traced_memory()[1]
                self.timings.bytes[name] = max(self.timings.bytes[name], peak - base)

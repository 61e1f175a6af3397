"""Monte Carlo simulation: random plan, compiled kernels and the driver."""

from radar.simulation.rng import RandomPlan, param_id, sample

_LAZY = {
    "simulate": "engine",
    "nb_matrix": "engine",
    "SimulationResult": "engine",
    "NbMatrix": "engine",
    "Engine": "engine",
    "evaluate_run": "evaluate",
}


def __getattr__(name):
    # deferred so that the language package can import arithmetic helpers
    if name in _LAZY:
        import importlib

        module = importlib.import_module(f"radar.simulation.{_LAZY[name]}")
        return getattr(module, name)
    raise AttributeError(name)


__all__ = ["RandomPlan", "param_id", "sample", *_LAZY]

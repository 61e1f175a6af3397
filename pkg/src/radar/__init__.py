"""Decision analysis under uncertainty: design-space enumeration, Monte Carlo
simulation, Pareto shortlisting and value-of-information analysis."""

__version__ = "0.1.0"

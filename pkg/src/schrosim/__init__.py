"""Spectral warped-phase simulation of discrete linear dynamical systems,
with iterative linear-system and dominant-eigenpair solvers built on top."""

__version__ = "0.1.0"

from . import baselines, core, errors, schrodingerization, solvers  # noqa: F401

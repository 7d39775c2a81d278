"""Galerkin POD reduced-order models with data-driven variational multiscale closure."""

from .closure import (ClosureOperators, ClosureSamples, UnresolvedInterpolant, d2vms_rhs,
                      extract_closure_samples, fit_closure, fit_toy_closure, irom_rhs)
from .diagnostics import ErrorReport, compare, emit, field_error_series
from .errors import *  # noqa: F401,F403
from .fom import (FomConfig, Grid1D, SnapshotSet, ToySystem, default_toy, solve_burgers,
                  solve_toy)
from .galerkin import RomOperators, assemble_operators, grom_rhs
from .pod import (CoefficientSeries, PodBasis, compute_pod, project, project_series,
                  projection_error, reconstruct)
from .timestepping import RomTrajectory, Variant, integrate_rom

__version__ = "0.1.0"

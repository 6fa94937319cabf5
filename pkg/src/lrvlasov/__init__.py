"""Conservative dynamical low-rank solver for the 1d1v Vlasov-Poisson equation."""

from .conservation import GLOBAL, LOCAL, NONE, CorrectionMode, combined
from .config import ConfigError, RunConfig, build_config, parse_config
from .diagnostics import DiagnosticsRecord, diagnose_fullgrid, diagnose_lowrank
from .fullgrid import FullGridState, fullgrid_strang_step, initialize_fullgrid
from .grid import GridFunction, PeriodicGrid, fourier_advect, integrate, spectral_derivative
from .integrator import BlowUpError, StepReport, lie_step, strang_step, substep_solve
from .moments import VMoments, XMoments, compute_v_moments, compute_x_moments
from .poisson import ElectricField, electric_energy, solve_field
from .runner import RunResult, make_grids, run, simulate
from .state import (
    LowRankState,
    Scenario,
    density,
    evaluate_full,
    initialize_from_function,
    orthonormalize,
    read_snapshot,
    write_snapshot,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

"""Energy-preserving finite element schemes for the periodic BBM equation,
with r-adaptive moving meshes and conservative inter-mesh transfer."""

from .mesh import (
    Mesh1D,
    MonitorSamples,
    check_equidistribution,
    equidistribute_deboor,
    monitor_arc_length,
    smooth_monitor,
)
from .basis import (
    BasisKind,
    BasisSet,
    QuadratureRule,
    eval_basis,
    eval_field,
    eval_field_many,
    gauss_rule,
    impose_function,
    supported_dofs,
)
from .assembly import (
    AssemblyCache,
    TripleTensor,
    assemble_cross_mass,
    assemble_mass,
    assemble_skew_h1,
    assemble_skew_h2,
    assemble_stiffness,
    assemble_triple_product,
)
from .bbm import (
    SolitonParams,
    State,
    avf_gradient_h1,
    avf_gradient_h2,
    exact_soliton,
    gradient_h1,
    gradient_h2,
    hamiltonian_h1,
    hamiltonian_h2,
    initial_two_wave,
)
from .steppers import (
    SolverConfig,
    StepResult,
    dg1_step_fixed,
    dg2_step_fixed,
    dg_moving_step,
    implicit_midpoint_step,
    newton_solve,
    newton_solve_full,
    rk4_step,
    trapezoidal_step,
)
from .transfer import conservative_transfer, interp_transfer
from .diagnostics import hamiltonian_drift, phase_error, shape_error
from .config import RunConfig, parse_config
from .runner import RunResult, run

__all__ = [name for name in dir() if not name.startswith("_")]

"""Nonlinear Schroedinger dynamics with a point interaction, on radial grids."""

from ._kernels import BACKEND
from .diagnostics import (
    DiagnosticRecord,
    bc_residual,
    continuous_dependence_probe,
    decay_fit,
    drift,
    energy_bound_ratio,
    dnorm,
    energy,
    mass,
    strichartz_accumulate,
    weak_residual,
)
from .evolution import (
    EvolutionConfig,
    PicardResult,
    Trajectory,
    evolve,
    exp_midpoint_step,
    nonlinear_phase,
    picard_solve,
    u_apply,
    well_posedness_window,
)
from .fractional import (
    dhalf_norm,
    frac_resolvent_apply,
    free_frac_apply,
    inequality_report,
    sobolev_norm,
)
from .point_interaction import (
    DomainState,
    PointInteractionOp,
    bound_state,
    from_values,
    gaussian_state,
    green_state,
    green_sample,
    h_apply,
    krein_resolvent_apply,
    lambda_coeff,
    pac_project,
    phi_at_zero,
    rebase,
    synthesize,
)
from .radial_core import (
    RadialGrid,
    bessel_i0,
    bessel_k0,
    free_resolvent_apply,
    inner_product,
    laplacian_apply,
    lp_norm,
    make_grid,
)

__version__ = "0.1.0"

"""Doubly constrained Gross-Pitaevskii minimizers in 2D.

Computes energy minimizers with prescribed mass and mean angular momentum,
extracts the two Lagrange multipliers of the stationary rotating equation,
and verifies the structural identities connecting the singly and doubly
constrained problems, plus conservation and orbital stability under the
time-dependent flow.
"""

from .constraints import (
    ConstraintInfeasible,
    Feasibility,
    MassSplitNegative,
    ModeMassProfile,
    NewtonDiverged,
    feasibility,
    mass_split,
    retract,
    single_mode_seed,
    solve_tilt,
    tangent_project,
    two_mode_seed,
)
from .dynamics import (
    BlowUpError,
    EvolveTrace,
    OrbitReference,
    StabilityReport,
    evolve,
    h1_norm,
    orbit_distance,
    rotate_field,
    stability_experiment,
    step_strang,
)
from .fields import (
    Grid,
    WaveField,
    apply_Lz,
    gradient_spectral,
    inner_product,
    make_grid,
    mass_outside_radius,
    norm,
    read_field,
    reflect_first_axis,
    rotate_quarter,
    write_field,
)
from .functionals import (
    Constraints,
    Multipliers,
    PhysicsParams,
    angular_momentum,
    energy,
    euler_lagrange_apply,
    identity_check,
    interaction_norm,
    mass,
    multipliers_estimate,
    rotating_energy,
    stationary_residual,
)
from .minimize import (
    EnergyCurve,
    LegendreReport,
    MinimizeReport,
    NoFeasibleSeed,
    SolveOptions,
    default_seeds,
    legendre_check,
    minimize_doubly,
    minimize_mass_only,
    scan_l,
)
from .modes import (
    AngularModes,
    c4_project,
    dominant_mode_fraction,
    from_modes,
    mode_masses,
    to_modes,
)

__version__ = "0.1.0"

"""Constrained unitary quantum motion in canonical action-angle coordinates.

Pure states of an n-level system are charted by angles q and actions p in
which the Schroedinger flow is a linear Hamiltonian system.  Algebraic
constraints (even in number) are enforced by eliminating their Lagrange
multipliers through the constraint commutator matrix, yielding a modified
symplectic structure whose flow stays on the constraint surface and
conserves the energy.  Shipped models cover product-state surfaces of two
and three spin-1/2 factors and the surface of disentangled two-spin states,
with closed-form reference dynamics, Bloch-sphere maps, a drift-monitoring
integrator, and a CLI.

All public operations are pure functions of their inputs; values are
immutable and safe to share across threads.
"""

from .dirac import (
    ConstraintSet,
    GradientReport,
    ModifiedStructure,
    annihilation_check,
    constrained_velocity,
    empty_constraints,
    invert_omega,
    lagrange_multipliers,
    lambda_tensor,
    modified_structure,
    omega_matrix,
    validate_gradients,
)
from .errors import (
    ChartSingularity,
    DegenerateSpectrum,
    DimensionError,
    DiracflowError,
    DomainError,
    DriftExceeded,
    GradientMismatch,
    PhaseUndefined,
    PoleSingularity,
    ProjectionFailed,
    SingularOmega,
)
from .integrate import (
    FlowComparison,
    IntegratorConfig,
    Trajectory,
    compare_flows,
    integrate,
    project_onto_surface,
)
from .models import (
    HeisenbergParams,
    ModelId,
    closed_form_velocity_ex1,
    closed_form_velocity_ex3,
    constraints_for,
    disentangled_bloch_rates,
    disentangled_constraints,
    disentangled_point_from_bloch,
    ex3_basis_map,
    heisenberg_matrix,
    heisenberg_spectrum,
    product_frequencies_three,
    product_frequencies_two,
    product_state_three,
    product_state_two,
    raw_quadric_residual,
    sample_disentangled_surface,
    sample_interior_point,
    sample_three_spin_surface,
    sample_two_spin_surface,
    segre_membership,
    spectrum_condition,
    three_spin_product_constraints,
    two_spin_product_constraints,
)
from .bloch import (
    BlochPoint,
    FieldGrid,
    field_grid,
    phase_to_bloch_ex1,
    spherical_velocity_ex1,
    spherical_velocity_ex3,
)
from .phase_space import (
    EnergySpectrum,
    HilbertVector,
    PhasePoint,
    build_state,
    canonical_omega,
    hamiltonian_gradient,
    hamiltonian_value,
    hilbert_to_phase,
    unitary_flow,
    wrap_angle,
)

__version__ = "0.1.0"

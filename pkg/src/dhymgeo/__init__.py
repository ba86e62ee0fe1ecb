"""Angle calculus and weak geodesics for positive (1,1)-potentials on flat tori."""

from .angles import (
    LiftedAngle,
    SingularityReport,
    classify_singular,
    eta_squeeze,
    modulus_r,
    phi_lifted_lsc,
    phi_lifted_usc,
    phi_regular,
    realpart_spectrum_check,
    slice_angle_gap,
    theta,
    theta_symmetric,
)
from .errors import DhymgeoError, PreconditionError, ValidationError
from .geodesic import (
    Barriers,
    GeodesicProblem,
    SolverReport,
    SpaceTimeJet,
    assemble_jet,
    build_barriers,
    harmonic_residual,
    perron_update,
    rho,
    rho_complex_hessian_factor,
    solve,
    strictify,
    validate_slices,
)
from .geometry import (
    AngleField,
    TorusGeometry,
    angle_field,
    complex_hessian,
    dhym_residual,
    h_membership,
    hat_theta,
    lambda_endo,
    read_grid,
    select_branch,
    write_grid,
    z_integral,
)
from .linalg import (
    bordered_det,
    bordered_matrix,
    eig_complex,
    eig_hermitian,
    format_matrix_literal,
    hermitian_of,
    iota,
    jmatrix,
    jproject,
    parse_matrix_literal,
)
from .subequations import (
    Branch,
    FuzzReport,
    SubeqSpec,
    convexity_fuzz,
    dual_of,
    duality_fuzz,
    member,
    member_angle,
    positivity_fuzz,
    strict_margin,
)

__version__ = "0.1.0"

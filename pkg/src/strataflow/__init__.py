"""Exact algebra of curve families in graded strata and their flows.

The package derives the polynomial relations carried by the even strata of
the z^2-invariant Grassmannian basis series, verifies the multiplicative
and tangent-space identities exactly over the rationals, extracts the
curve-level geometry (moduli, discriminants, metric and curvature, Poisson
ideal), converts the relation rows into commuting hydrodynamic systems,
and integrates those systems numerically with gradient-catastrophe
tracking and residual checks for the bilinear potential equation.

Modules
-------
exactalg    rationals, sparse polynomials, Laurent series, reduction
strata      basis series, relation derivation, structure constants
cohomology  tangent linearization, pairing identities, numeric pairings
geometry    curve coefficients, moduli/discriminant, curvature, ideals
flows       scalar hierarchy, coupled KdV systems, Riemann invariants
numerics    characteristics, upwind/MOL solvers, blow-up estimation
cli         batch commands over JSON configs
"""

from .exactalg import (
    EmptyWindowError,
    LaurentSeries,
    MultiPoly,
    RelationSet,
    UnknownVariableError,
    poly_arith,
)
from .strata import (
    CheckReport,
    InconsistentTruncationError,
    StratumSpec,
    StructureConstantTable,
    WindowExceededError,
    associativity_suite,
    basis_series,
    derive_relations,
    derive_rows,
    general_g0_closed_forms,
    structure_constants,
    symmetry_check_g0,
    verify_associativity,
)
from .cohomology import (
    CocycleTable,
    IndexBelowStratumError,
    TangentRelationSet,
    cocycle_identity_check,
    coboundary_property_check,
    coboundary_series,
    linearize,
    numeric_cocycle_g0,
    numeric_cocycle_g1,
    square_identity_check,
    vector_field_realization,
)
from .geometry import (
    CurveCoeffs,
    DegenerateMetricError,
    EllipticModuli,
    IdealBasis,
    coisotropy_check,
    curve_from_H,
    ideal_basis,
    metric_and_curvature_W1c,
    moduli_and_discriminant,
    poisson_cocycle,
)
from .flows import (
    BenneyReduction,
    ComplexRootsError,
    DiagonalSystem,
    HydroSystem,
    benney_reduction,
    commutativity_check,
    derive_bh_hierarchy,
    derive_dckdv,
    moduli_flow_g1,
    riemann_form_g1,
)
from .numerics import (
    CatastropheReport,
    CatastropheSignal,
    CFLViolationError,
    Field1D,
    Grid1D,
    NoBlowupDetectedError,
    PastCatastropheError,
    ShapeMismatchError,
    VacuumStateError,
    catastrophe_estimate,
    hirota_residual,
    selfsimilar_ode_check,
    solve_benney,
    solve_diagonal,
    solve_scalar_characteristics,
)

__version__ = "0.1.0"

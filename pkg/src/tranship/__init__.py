"""Transshipment norms for measures and first-order distributions.

Three mutually verifying routes to the Kantorovich norm of a balanced atom
measure (matching, dual potential, minimal-divergence flow), generalized
transport plans unifying rays and flux elements, transport densities on
grids, and the tangential/normal decomposition measuring the distance to
the closure of balanced measures.
"""

from .beckmann import (
    Flow,
    FlowNetwork,
    anisotropy_bound,
    complete_network,
    flow_to_vector_measure,
    grid_network,
    solve_beckmann,
)
from .density import GridDensity, export, rasterize_plan, rasterize_vector_measure
from .errors import (
    InfeasibleFlowError,
    TailBoundError,
    TranshipError,
    UnbalancedMeasureError,
    ValidationError,
    VerificationError,
)
from .funcs import Coordinate, Polynomial, RadialBump, polynomial_family
from .genplan import (
    GeneralizedPlan,
    PlanAtom,
    pair_plan,
    plan_from_matching,
    plan_from_vector_measure,
    ray_quotient,
    split,
    to_vector_measure,
    verify_projection,
)
from .geom import Domain, Grid
from .matchnorm import (
    Matching,
    Potential,
    brute_force_connection,
    dual_potential,
    flat_norm,
    minimal_connection,
)
from .measures import (
    CellField,
    DipoleChain,
    Distribution,
    NotAMeasure,
    SignedAtomMeasure,
    StructuredVectorMeasure,
    divergence_as_measure,
    from_dipoles,
    pair,
)
from .sharpspace import (
    Decomposition,
    ModulusCurve,
    TangentialSplit,
    decompose,
    distance_to_sharp,
    modulus,
    sharp_distance_via_plan,
    tangential_cycle,
    tangential_split,
    verify_modulus_bound,
)

__version__ = "0.1.0"

"""Connecting geodesics by lifting paths through exponential maps, with
properness, pseudoconvexity and disprisonment probes for geodesic families."""

from .errors import (
    ConeBreachError,
    ConfigurationError,
    ExpMapError,
    GeoliftError,
    NoTimelikeSeedError,
    PreconditionError,
    UnsupportedOperationError,
)
from .manifolds import (
    CausalCharacter,
    ManifoldSpec,
    TangentVector,
    aux_norm,
    catalog_ids,
    catalog_manifold,
    causal_character,
    unit_ray,
)
from .integrate import (
    GeodesicPath,
    IntegratorOptions,
    MaximalInterval,
    exp_map,
    integrate_geodesic,
    maximal_interval,
)
from .jacobi import (
    CausalConjugateReport,
    ConjugateReport,
    DexpMatrix,
    causal_conjugate_certificate,
    conjugate_scan,
    dexp,
)
from .lifting import (
    LiftOptions,
    LiftResult,
    PathSpec,
    causal_lift,
    lift_path,
    polyline_path,
    straight_path,
)
from .connect import (
    ConnectionResult,
    HomotopyResult,
    Solution,
    connect,
    connect_causal,
    enumerate_multiplicity,
    straighten_homotopy,
)
from .probes import (
    BallSpec,
    ConeSpec,
    ConsistencyReport,
    ProbeBudgets,
    ProbeReport,
    imprisonment_scan,
    properness_consistency_check,
    properness_probe,
    pseudoconvexity_scan,
)

__version__ = "0.1.0"

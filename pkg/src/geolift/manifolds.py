"""Chart-based manifold descriptions and the built-in catalog.

A manifold is a single chart: a dimension, a Christoffel field, an optional
(semi-Riemannian) metric and an optional domain predicate cutting regions out
of the chart. Periodic coordinates (cylinder angle, de Sitter angle) are
declared with their periods; integration happens in unwrapped coordinates and
wrapping is applied only where membership or distances are evaluated.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, PreconditionError, UnsupportedOperationError

__all__ = [
    "ManifoldSpec",
    "TangentVector",
    "CausalCharacter",
    "catalog_manifold",
    "catalog_ids",
    "causal_character",
    "aux_norm",
    "aux_norm_at",
    "unit_ray",
    "TIMELIKE",
    "NULL",
    "SPACELIKE",
    "FUTURE",
    "PAST",
]

TIMELIKE = "timelike"
NULL = "null"
SPACELIKE = "spacelike"
FUTURE = "future"
PAST = "past"

DEFAULT_TOL_CAUSAL = 1e-9
_TOL_ZERO = 1e-14

Point = np.ndarray
Vector = np.ndarray


@dataclass(frozen=True)
class ManifoldSpec:
    """Immutable chart description; all callables must be pure.

    christoffel(x) returns G with G[k, i, j] = Gamma^k_{ij}, symmetric in
    (i, j). dchristoffel(x), when given, returns dG[k, i, j, l] =
    d Gamma^k_{ij} / d x^l; otherwise central differences are used where
    derivatives are needed. domain_distance(x), when given, must be a lower
    bound on the chart distance from x to the excised set; it lets the
    integrator slow down near thin obstacles it could otherwise step across.
    """

    name: str
    dim: int
    christoffel: Callable[[Point], np.ndarray]
    domain_predicate: Optional[Callable[[Point], bool]] = None
    dchristoffel: Optional[Callable[[Point], np.ndarray]] = None
    metric: Optional[Callable[[Point], np.ndarray]] = None
    signature: Optional[str] = None  # "riemannian" | "lorentzian"
    time_orientation: Optional[Callable[[Point], Vector]] = None
    aux_metric: Optional[Callable[[Point], np.ndarray]] = None
    domain_distance: Optional[Callable[[Point], float]] = None
    periodic: tuple[tuple[int, float], ...] = ()
    flat: bool = False  # christoffel identically zero (integration fast path)

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigurationError(f"dim must be >= 2, got {self.dim}")

    # -- chart helpers ---------------------------------------------------

    def wrap(self, x: Point) -> Point:
        """Wrap periodic coordinates into their fundamental interval."""
        if not self.periodic:
            return np.asarray(x, dtype=float)
        y = np.array(x, dtype=float)
        for axis, period in self.periodic:
            y[axis] = (y[axis] + period / 2.0) % period - period / 2.0
        return y

    def delta(self, a: Point, b: Point) -> Vector:
        """Chart displacement b - a, using the wrapped representative of
        minimal length on periodic axes."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        for axis, period in self.periodic:
            d[axis] = (d[axis] + period / 2.0) % period - period / 2.0
        return d

    def distance(self, a: Point, b: Point) -> float:
        """Euclidean chart distance with periodic wrapping.

        This is the working substitute for the auxiliary-metric distance on
        catalog entries whose auxiliary metric is the chart Euclidean one.
        """
        return float(np.linalg.norm(self.delta(a, b)))

    def in_domain(self, x: Point, margin: float = 0.0) -> bool:
        w = self.wrap(x)
        if not np.all(np.isfinite(w)):
            return False
        if self.domain_predicate is not None and not self.domain_predicate(w):
            return False
        if margin > 0.0 and self.domain_distance is not None:
            if self.domain_distance(w) <= margin:
                return False
        return True

    def aux_matrix(self, x: Point) -> np.ndarray:
        if self.aux_metric is None:
            return np.eye(self.dim)
        return self.aux_metric(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TangentVector:
    """A vector attached to a chart point."""

    base: Point
    components: Vector

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))
        if self.base.shape != self.components.shape:
            raise ConfigurationError("base and components must have equal length")


@dataclass(frozen=True)
class CausalCharacter:
    tag: str  # TIMELIKE | NULL | SPACELIKE
    orientation: Optional[str] = None  # FUTURE | PAST

    @property
    def is_causal(self) -> bool:
        return self.tag in (TIMELIKE, NULL)


def aux_norm_at(M: ManifoldSpec, base: Point, components: Vector) -> float:
    """h-norm sqrt(h_ij v^i v^j) with h the auxiliary Riemannian metric."""
    v = np.asarray(components, dtype=float)
    if M.aux_metric is None:
        return float(np.linalg.norm(v))
    h = M.aux_metric(np.asarray(base, dtype=float))
    return float(math.sqrt(max(0.0, float(v @ h @ v))))


def aux_norm(M: ManifoldSpec, v: TangentVector) -> float:
    if not M.in_domain(v.base):
        raise PreconditionError(f"base point {v.base} outside domain of {M.name}")
    return aux_norm_at(M, v.base, v.components)


def unit_ray(M: ManifoldSpec, p: Point, direction: Vector) -> TangentVector:
    """h-unit tangent vector at p pointing along the given chart direction."""
    n = aux_norm_at(M, p, direction)
    if n <= _TOL_ZERO:
        raise PreconditionError("cannot normalize a (near-)zero direction")
    return TangentVector(p, np.asarray(direction, dtype=float) / n)


def causal_character(
    M: ManifoldSpec, v: TangentVector, tol_causal: float = DEFAULT_TOL_CAUSAL
) -> CausalCharacter:
    """Trichotomy of g(v, v): timelike below -tol, null within the tol band
    (for nonzero v), spacelike otherwise.

    The null band makes the classification robust: near the cone the sign of
    g(v, v) is numerically meaningless. The quadratic form is evaluated on the
    h-normalized vector so the band does not scale with |v|.
    """
    if M.metric is None:
        raise UnsupportedOperationError(f"{M.name} carries no metric")
    base = M.wrap(v.base)
    if not M.in_domain(base):
        raise PreconditionError(f"base point {v.base} outside domain of {M.name}")
    g = M.metric(base)
    hnorm = aux_norm_at(M, base, v.components)
    if hnorm <= _TOL_ZERO:
        return CausalCharacter(SPACELIKE)
    u = v.components / hnorm
    q = float(u @ g @ u)
    if q < -tol_causal:
        tag = TIMELIKE
    elif abs(q) <= tol_causal:
        tag = NULL
    else:
        return CausalCharacter(SPACELIKE)
    orientation = None
    if M.time_orientation is not None:
        t_field = M.time_orientation(base)
        s = float(u @ g @ t_field)
        orientation = FUTURE if s < 0.0 else PAST
    return CausalCharacter(tag, orientation)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _flat_christoffel(m: int):
    zeros = _readonly(np.zeros((m, m, m)))

    def gamma(x):
        return zeros

    return gamma


def _flat_dchristoffel(m: int):
    zeros = _readonly(np.zeros((m, m, m, m)))

    def dgamma(x):
        return zeros

    return dgamma


def _const_metric(g: np.ndarray):
    g = _readonly(np.asarray(g, dtype=float))

    def metric(x):
        return g

    return metric


_MINK_G = np.diag([-1.0, 1.0])
_E2 = np.eye(2)
_DT = np.array([1.0, 0.0])


def _coord_time_field(x):
    return _DT


def _euclidean(m: int) -> ManifoldSpec:
    return ManifoldSpec(
        name=f"euclidean({m})",
        dim=m,
        christoffel=_flat_christoffel(m),
        dchristoffel=_flat_dchristoffel(m),
        metric=_const_metric(np.eye(m)),
        signature="riemannian",
        flat=True,
    )


def _minkowski2(name: str, domain_predicate=None, domain_distance=None) -> ManifoldSpec:
    return ManifoldSpec(
        name=name,
        dim=2,
        christoffel=_flat_christoffel(2),
        dchristoffel=_flat_dchristoffel(2),
        metric=_const_metric(_MINK_G),
        signature="lorentzian",
        time_orientation=_coord_time_field,
        domain_predicate=domain_predicate,
        domain_distance=domain_distance,
        flat=True,
    )


_REMOVED_POINT = np.array([1.0, 0.0])


def _minus_point_predicate(x):
    return bool(abs(x[0] - 1.0) > 1e-30 or abs(x[1]) > 1e-30)


def _minus_point_distance(x):
    return float(math.hypot(x[0] - 1.0, x[1]))


def _minus_quadrant_predicate(x):
    # removed: the closed quadrant {t <= 0, x >= 0}
    return bool(x[0] > 0.0 or x[1] < 0.0)


def _minus_quadrant_distance(x):
    return float(math.hypot(max(x[0], 0.0), max(-x[1], 0.0)))


def _strip_predicate(x):
    return bool(0.0 < x[1] < 1.0)


def _strip_distance(x):
    return float(min(x[1], 1.0 - x[1]))


# Round unit sphere in the chart of stereographic projection from the
# equatorial point (1, 0, 0) onto the tangent plane at (-1, 0, 0): the chart
# covers the whole sphere except (1, 0, 0), the conformal factor is
# lam(u) = 4 / (4 + |u|^2), and the poles (0, 0, +-1) sit at u = (0, +-2).
# The auxiliary metric is the round metric itself, so h-unit rays are
# arc-length parametrized regardless of where they start.
SPHERE2_NORTH_POLE = _readonly(np.array([0.0, 2.0]))
SPHERE2_SOUTH_POLE = _readonly(np.array([0.0, -2.0]))


def _sphere_lam(u):
    return 4.0 / (4.0 + float(u @ u))


def _sphere_christoffel(u):
    # conformal 2d chart: Gamma^k_{ij} = d_i phi d_{jk} + d_j phi d_{ik}
    # - d_k phi d_{ij}, phi = log(conformal factor); written out for speed
    lam = _sphere_lam(u)
    p1 = -0.5 * lam * float(u[0])
    p2 = -0.5 * lam * float(u[1])
    return np.array(
        [[[p1, p2], [p2, -p1]], [[-p2, p1], [p1, p2]]]
    )


def _sphere_dchristoffel(u):
    # hessian of log(conformal factor): H = lam^2/4 u u^T - lam/2 I
    lam = _sphere_lam(u)
    q = 0.25 * lam * lam
    a = q * float(u[0]) * float(u[0]) - 0.5 * lam
    b = q * float(u[0]) * float(u[1])
    c = q * float(u[1]) * float(u[1]) - 0.5 * lam
    return np.array(
        [
            [[(a, b), (b, c)], [(b, c), (-a, -b)]],
            [[(-b, -c), (a, b)], [(a, b), (b, c)]],
        ]
    )


def _sphere_metric(u):
    lam = _sphere_lam(u)
    return (lam * lam) * _E2


def _sphere2() -> ManifoldSpec:
    return ManifoldSpec(
        name="sphere2",
        dim=2,
        christoffel=_sphere_christoffel,
        dchristoffel=_sphere_dchristoffel,
        metric=_sphere_metric,
        signature="riemannian",
        aux_metric=_sphere_metric,
    )


def _cylinder_flat() -> ManifoldSpec:
    # chart (x, theta) with theta periodic of period 2*pi; flat metric
    return ManifoldSpec(
        name="cylinder_flat",
        dim=2,
        christoffel=_flat_christoffel(2),
        dchristoffel=_flat_dchristoffel(2),
        metric=_const_metric(np.eye(2)),
        signature="riemannian",
        periodic=((1, 2.0 * math.pi),),
        flat=True,
    )


def _desitter_christoffel(x):
    t = x[0]
    G = np.zeros((2, 2, 2))
    G[0, 1, 1] = math.sinh(t) * math.cosh(t)
    G[1, 0, 1] = G[1, 1, 0] = math.tanh(t)
    return G


def _desitter_dchristoffel(x):
    t = x[0]
    dG = np.zeros((2, 2, 2, 2))
    dG[0, 1, 1, 0] = math.cosh(2.0 * t)
    sech2 = 1.0 / math.cosh(t) ** 2
    dG[1, 0, 1, 0] = dG[1, 1, 0, 0] = sech2
    return dG


def _desitter_metric(x):
    c = math.cosh(x[0])
    return np.diag([-1.0, c * c])


def _desitter2() -> ManifoldSpec:
    # global chart (t, phi), metric diag(-1, cosh^2 t), phi periodic 2*pi
    return ManifoldSpec(
        name="desitter2",
        dim=2,
        christoffel=_desitter_christoffel,
        dchristoffel=_desitter_dchristoffel,
        metric=_desitter_metric,
        signature="lorentzian",
        time_orientation=_coord_time_field,
        periodic=((1, 2.0 * math.pi),),
    )


_EUCLIDEAN_RE = re.compile(r"^euclidean\((\d+)\)$")

_BUILDERS = {
    "sphere2": _sphere2,
    "cylinder_flat": _cylinder_flat,
    "minkowski2": lambda: _minkowski2("minkowski2"),
    "minkowski2_minus_point": lambda: _minkowski2(
        "minkowski2_minus_point",
        domain_predicate=_minus_point_predicate,
        domain_distance=_minus_point_distance,
    ),
    "minkowski2_minus_quadrant": lambda: _minkowski2(
        "minkowski2_minus_quadrant",
        domain_predicate=_minus_quadrant_predicate,
        domain_distance=_minus_quadrant_distance,
    ),
    "minkowski2_strip": lambda: _minkowski2(
        "minkowski2_strip",
        domain_predicate=_strip_predicate,
        domain_distance=_strip_distance,
    ),
    "desitter2": _desitter2,
}


def catalog_ids() -> list[str]:
    return ["euclidean(m)"] + sorted(_BUILDERS)


def catalog_manifold(catalog_id: str) -> ManifoldSpec:
    """Build a catalog manifold from its stable string identifier."""
    m = _EUCLIDEAN_RE.match(catalog_id.strip())
    if m:
        dim = int(m.group(1))
        if dim < 2:
            raise ConfigurationError("euclidean(m) requires m >= 2")
        return _euclidean(dim)
    builder = _BUILDERS.get(catalog_id.strip())
    if builder is None:
        raise ConfigurationError(
            f"unknown catalog id {catalog_id!r}; known ids: {', '.join(catalog_ids())}"
        )
    return builder()

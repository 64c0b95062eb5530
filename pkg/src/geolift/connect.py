"""Connecting geodesics: solve exp_p(v) = q by lifting seed paths.

Every solver here reduces to the same mechanism: build one or more seed
paths ending at q, lift them through exp_p, and read connecting velocities
off the completed lifts. Failed lifts are kept as classified diagnostics
since the failure mode (conjugate stall vs domain escape) is the finding.

Seed strategies:

  straight    one chart-straight seed from p, lifted from v0 = 0
  waypoints   a user polyline, lifted from v0 = 0
  multistart  radial grid of regular start vectors v0 = s * (+-dhat); each
              start is joined to q by a chart segment from exp_p(v0) and
              lifted from v0. This finds solutions in the other sheets of
              exp_p, where lifting from 0 alone cannot reach (on the round
              sphere every nonzero vector over p is singular, so sheets
              must be entered from their interior).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ConfigurationError,
    ExpMapError,
    NoTimelikeSeedError,
    PreconditionError,
    UnsupportedOperationError,
)
from .integrate import DEFAULT_OPTIONS, IntegratorOptions, exp_map
from .jacobi import exp_and_dexp
from .lifting import (
    DEFAULT_LIFT_OPTIONS,
    LIFT_INTEGRATOR_DEFAULTS,
    COMPLETE,
    LiftOptions,
    LiftResult,
    PathSpec,
    causal_lift,
    lift_path,
    polyline_path,
    straight_path,
    validate_path,
)
from .manifolds import (
    FUTURE,
    TIMELIKE,
    CausalCharacter,
    ManifoldSpec,
    TangentVector,
    aux_norm_at,
    causal_character,
)

__all__ = [
    "Solution",
    "ConnectionResult",
    "connect",
    "connect_causal",
    "enumerate_multiplicity",
    "straighten_homotopy",
    "HomotopyResult",
    "build_timelike_seed",
    "DEDUP_TOL",
]

DEDUP_TOL = 1e-5


@dataclass(frozen=True)
class Solution:
    v: TangentVector
    class_label: int
    character: Optional[CausalCharacter] = None
    h_norm: float = 0.0


@dataclass
class ConnectionResult:
    p: np.ndarray
    q: np.ndarray
    solutions: list[Solution]
    diagnostics: list[dict] = field(default_factory=list)

    @property
    def velocities(self) -> list[np.ndarray]:
        return [s.v.components for s in self.solutions]


def _character_of(M, p, v) -> Optional[CausalCharacter]:
    if M.metric is None:
        return None
    return causal_character(M, TangentVector(p, v))


def _finish(M, p, q, found, diagnostics, dedup_tol, lift_tol, opts) -> ConnectionResult:
    """Verify endpoints, dedup velocities in the h-norm at p, attach
    causal characters."""
    solutions: list[Solution] = []
    for label, v in found:
        try:
            x = exp_map(M, p, v, opts)
        except ExpMapError:
            continue
        if M.distance(x, q) > 10.0 * lift_tol:
            continue
        if any(
            aux_norm_at(M, p, v - s.v.components) <= dedup_tol for s in solutions
        ):
            continue
        solutions.append(
            Solution(
                TangentVector(p, v),
                label,
                _character_of(M, p, v),
                aux_norm_at(M, p, v),
            )
        )
    return ConnectionResult(p=p, q=q, solutions=solutions, diagnostics=diagnostics)


def _diag(seed_name, lift: LiftResult) -> dict:
    return {
        "seed": seed_name,
        "status": lift.status,
        "failure": lift.failure,
        "reach": lift.reach,
        "message": lift.diagnostics.get("message", ""),
        "terminal_v": list(map(float, lift.vs[-1])),
    }


def connect(
    M: ManifoldSpec,
    p: np.ndarray,
    q: np.ndarray,
    strategy: str = "straight",
    opts: IntegratorOptions = LIFT_INTEGRATOR_DEFAULTS,
    lopts: LiftOptions = DEFAULT_LIFT_OPTIONS,
    waypoints: Optional[list[np.ndarray]] = None,
    budget: float = 10.0,
    grid_step: float = 1.0,
    grid_offset: float = 0.0,
    directions: tuple[float, ...] = (+1.0, -1.0),
    dedup_tol: float = DEDUP_TOL,
) -> ConnectionResult:
    """Find geodesic segments from p to q; see the module docstring for the
    seed strategies. Solutions satisfy exp_p(v) = q to within 10x lift_tol."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    for pt, nm in ((p, "p"), (q, "q")):
        if not M.in_domain(pt):
            raise PreconditionError(f"{nm} outside domain of {M.name}")

    q_rep = p + M.delta(p, q)
    seeds: list[tuple[str, np.ndarray, PathSpec]] = []
    if strategy == "straight":
        seeds.append(("straight", np.zeros(M.dim), straight_path(p, q_rep)))
    elif strategy == "waypoints":
        if not waypoints:
            raise ConfigurationError("strategy 'waypoints' needs waypoints")
        pts = [p] + [np.asarray(w, dtype=float) for w in waypoints] + [q_rep]
        seeds.append(("waypoints", np.zeros(M.dim), polyline_path(pts)))
    elif strategy == "multistart":
        seeds.append(("straight", np.zeros(M.dim), straight_path(p, q_rep)))
        d = M.delta(p, q)
        if float(np.linalg.norm(d)) < 1e-12:
            d = np.zeros(M.dim)
            d[0] = 1.0
        dhat = d / aux_norm_at(M, p, d)
        s = grid_offset if grid_offset > 0.0 else grid_step
        while s <= budget + 1e-12:
            for sign in directions:
                v0 = sign * s * dhat
                try:
                    x0, D0 = exp_and_dexp(M, p, v0, opts)
                except ExpMapError:
                    continue
                if abs(D0.det) < 1e-3:
                    continue  # too close to a singular sheet boundary
                target = x0 + M.delta(x0, q)
                seeds.append((f"radial{sign * s:+.3g}", v0, straight_path(x0, target)))
            s += grid_step
    else:
        raise ConfigurationError(f"unknown connect strategy {strategy!r}")

    found: list[tuple[int, np.ndarray]] = []
    diagnostics: list[dict] = []
    for label, (name, v0, path) in enumerate(seeds):
        in_dom = all(M.in_domain(path.eval(float(t))) for t in np.linspace(0, 1, 17))
        if not in_dom:
            diagnostics.append({"seed": name, "status": "skipped", "failure": None,
                                "reach": 0.0, "message": "seed path leaves the domain"})
            continue
        try:
            lift = lift_path(M, p, path, v0, lopts, opts)
        except PreconditionError as e:
            diagnostics.append({"seed": name, "status": "error", "failure": None,
                                "reach": 0.0, "message": str(e)})
            continue
        if lift.complete:
            found.append((label, lift.vs[-1]))
        else:
            diagnostics.append(_diag(name, lift))

    if not found and diagnostics and all(d["status"] == "skipped" for d in diagnostics):
        raise ConfigurationError(
            "no seed path inside the domain; supply waypoints around the obstacle"
        )
    return _finish(M, p, q, found, diagnostics, dedup_tol, lopts.lift_tol, opts)


# ---------------------------------------------------------------------------
# causal connection
# ---------------------------------------------------------------------------


def _segment_timelike(M, a, b, n=33, tol=1e-9) -> bool:
    d = b - a
    for t in np.linspace(0.0, 1.0, n):
        x = a + t * d
        if not M.in_domain(x):
            return False
        ch = causal_character(M, TangentVector(x, d), tol)
        if ch.tag != TIMELIKE:
            return False
    return True


def build_timelike_seed(
    M: ManifoldSpec,
    p: np.ndarray,
    q: np.ndarray,
    mode: str = "auto",
    bend_offset: float = 0.15,
    max_retries: int = 8,
) -> PathSpec:
    """Construct a piecewise-smooth timelike path from p to q.

    The chart segment is used when it is timelike and stays in the domain;
    otherwise (or when mode="bend") a two-leg path through a waypoint on the
    perpendicular bisector is tried with growing offsets. Raises
    NoTimelikeSeedError when nothing works: whether q lies in the
    chronological set of p is then numerically undetermined.
    """
    p = np.asarray(p, dtype=float)
    q_rep = p + M.delta(p, q)

    if mode in ("auto", "straight") and _segment_timelike(M, p, q_rep):
        if mode != "bend":
            return straight_path(p, q_rep, causal_tag=TIMELIKE)
    if mode == "straight":
        raise NoTimelikeSeedError(
            f"chart segment from {p} to {q} is not a timelike path in the domain"
        )

    d = q_rep - p
    perp = np.zeros(M.dim)
    perp[:2] = (-d[1], d[0])
    nperp = float(np.linalg.norm(perp))
    if nperp < 1e-14:
        raise NoTimelikeSeedError("degenerate direction for the bent seed")
    perp /= nperp
    mid = 0.5 * (p + q_rep)
    offset = bend_offset * max(float(np.linalg.norm(d)), 1.0)
    for _ in range(max_retries):
        for sign in (+1.0, -1.0):
            w = mid + sign * offset * perp
            if (
                M.in_domain(w)
                and _segment_timelike(M, p, w)
                and _segment_timelike(M, w, q_rep)
            ):
                return polyline_path([p, w, q_rep], causal_tag=TIMELIKE)
        offset *= 0.5
    raise NoTimelikeSeedError(
        f"q={q} not reachable by a constructed timelike seed from p={p}: "
        "q in I(p) is numerically undetermined"
    )


def connect_causal(
    M: ManifoldSpec,
    p: np.ndarray,
    q: np.ndarray,
    opts: IntegratorOptions = LIFT_INTEGRATOR_DEFAULTS,
    lopts: LiftOptions = DEFAULT_LIFT_OPTIONS,
    seed_mode: str = "auto",
    bend_offset: float = 0.15,
) -> ConnectionResult:
    """Find a timelike geodesic from p to q by lifting a timelike seed path.

    On success the single solution is the connecting velocity v with
    exp_p(v) = q. On failure the classified obstruction is retained in the
    diagnostics: a conjugate point along a causal geodesic, or an escape
    from the maximal exp domain (the failure mode of the removed-point
    counterexample).
    """
    if M.metric is None or M.signature != "lorentzian":
        raise UnsupportedOperationError("connect_causal needs a Lorentzian manifold")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    seed = build_timelike_seed(M, p, q, mode=seed_mode, bend_offset=bend_offset)
    lift = causal_lift(M, p, seed, lopts, opts)
    if lift.complete:
        return _finish(
            M, p, q, [(0, lift.vs[-1])], [], DEDUP_TOL, lopts.lift_tol, opts
        )
    name = "bent" if seed.breaks else "straight"
    return ConnectionResult(p=p, q=q, solutions=[], diagnostics=[_diag(name, lift)])


# ---------------------------------------------------------------------------
# multiplicity enumeration
# ---------------------------------------------------------------------------


def enumerate_multiplicity(
    M: ManifoldSpec,
    p: np.ndarray,
    q: np.ndarray,
    class_budget: int,
    opts: IntegratorOptions = LIFT_INTEGRATOR_DEFAULTS,
    lopts: LiftOptions = DEFAULT_LIFT_OPTIONS,
    period_vector: Optional[np.ndarray] = None,
) -> ConnectionResult:
    """Enumerate connecting geodesics per homotopy class label.

    On a manifold with a declared periodic coordinate (or an explicit deck
    period vector), class k targets the unrolled representative
    q + k * period; the constant geodesic (p = q, k = 0) is excluded. On
    sphere2 classes are the sheets of exp_p between consecutive singular
    shells, entered by radial multistart; the truncation at class_budget is
    reported in the labels themselves.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if class_budget < 1:
        raise ConfigurationError("class_budget must be >= 1")

    if period_vector is None and M.periodic:
        axis, period = M.periodic[0]
        period_vector = np.zeros(M.dim)
        period_vector[axis] = period

    if period_vector is not None:
        period_vector = np.asarray(period_vector, dtype=float)
        q0 = p + M.delta(p, q)
        solutions: list[Solution] = []
        diagnostics = []
        for k in range(-class_budget, class_budget + 1):
            q_k = q0 + k * period_vector
            if float(np.linalg.norm(q_k - p)) < 1e-12:
                continue  # constant geodesic
            lift = lift_path(M, p, straight_path(p, q_k), np.zeros(M.dim), lopts, opts)
            if not lift.complete:
                diagnostics.append(_diag(f"class{k:+d}", lift))
                continue
            v = lift.vs[-1]
            # verify against the unrolled representative of this class
            try:
                x = exp_map(M, p, v, opts)
            except ExpMapError:
                continue
            if float(np.linalg.norm(x - q_k)) > 10.0 * lopts.lift_tol:
                continue
            if any(
                aux_norm_at(M, p, v - s.v.components) <= DEDUP_TOL for s in solutions
            ):
                continue
            solutions.append(
                Solution(TangentVector(p, v), k, _character_of(M, p, v), aux_norm_at(M, p, v))
            )
        return ConnectionResult(p=p, q=q, solutions=solutions, diagnostics=diagnostics)

    if M.name == "sphere2":
        # sheets of exp_p between singular shells |v|_h in (k*pi, (k+1)*pi)
        res = connect(
            M,
            p,
            q,
            strategy="multistart",
            opts=opts,
            lopts=lopts,
            budget=(class_budget + 1) * math.pi,
            grid_step=math.pi / 2.0,
        )
        relabeled = [
            Solution(s.v, int(s.h_norm // math.pi), s.character, s.h_norm)
            for s in res.solutions
        ]
        res.solutions = relabeled
        return res

    raise UnsupportedOperationError(
        f"{M.name} declares no periodic coordinate or deck period vector"
    )


# ---------------------------------------------------------------------------
# the straightening homotopy
# ---------------------------------------------------------------------------


@dataclass
class HomotopyResult:
    s_values: np.ndarray
    t_values: np.ndarray
    points: np.ndarray  # (n_s, n_t, m)
    speed2: np.ndarray  # (n_s, n_t - 1): g(xdot, xdot) per parameter segment
    slice_timelike: list[bool]
    max_speed2: np.ndarray  # per slice
    endpoint_spread: float
    base_spread: float
    breaches: list[tuple[int, float]] = field(default_factory=list)

    @property
    def all_slices_timelike(self) -> bool:
        return all(self.slice_timelike)


def straighten_homotopy(
    M: ManifoldSpec,
    p: np.ndarray,
    lift: LiftResult,
    n_s: int = 50,
    n_t: int = 50,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
    tol_causal: float = 1e-9,
) -> HomotopyResult:
    """Straighten a lifted timelike path onto its connecting geodesic.

    The two-branch interpolation (t/s) v(s) for t <= s, v(t) for s <= t is
    mapped through exp_p on an n_s x n_t grid: slice s = 0 reproduces the
    lifted path, slice s = 1 is the geodesic t -> exp_p(t v(1)), and every
    intermediate slice is checked to be a timelike curve with the same
    endpoints. Slices whose measured g(xdot, xdot) exceeds -tol_causal are
    recorded as breaches.
    """
    if M.metric is None:
        raise UnsupportedOperationError("straighten_homotopy needs a metric")
    if not lift.complete:
        raise PreconditionError("homotopy needs a complete lift")
    p = np.asarray(p, dtype=float)
    if float(np.linalg.norm(lift.vs[0])) > 1e-12:
        raise PreconditionError("lift must start at the zero vector")
    if n_s < 2 or n_t < 2:
        raise ConfigurationError("n_s and n_t must be >= 2")

    s_vals = np.linspace(0.0, 1.0, n_s)
    t_vals = np.linspace(0.0, 1.0, n_t)
    m = M.dim
    points = np.empty((n_s, n_t, m))
    for i, s in enumerate(s_vals):
        for j, t in enumerate(t_vals):
            if s > 0.0 and t <= s:
                vbar = (t / s) * lift.v_at(s)
            else:
                vbar = lift.v_at(t)
            points[i, j] = exp_map(M, p, vbar, opts)

    dt = t_vals[1] - t_vals[0]
    speed2 = np.empty((n_s, n_t - 1))
    for i in range(n_s):
        for j in range(n_t - 1):
            vel = (points[i, j + 1] - points[i, j]) / dt
            mid = 0.5 * (points[i, j + 1] + points[i, j])
            g = M.metric(M.wrap(mid))
            speed2[i, j] = float(vel @ g @ vel)

    max_speed2 = speed2.max(axis=1)
    slice_ok = [bool(ms < -tol_causal) for ms in max_speed2]
    breaches = [
        (i, float(max_speed2[i])) for i, ok in enumerate(slice_ok) if not ok
    ]
    endpoint_spread = float(
        max(np.linalg.norm(points[i, -1] - points[0, -1]) for i in range(n_s))
    )
    base_spread = float(max(np.linalg.norm(points[i, 0] - p) for i in range(n_s)))
    return HomotopyResult(
        s_values=s_vals,
        t_values=t_vals,
        points=points,
        speed2=speed2,
        slice_timelike=slice_ok,
        max_speed2=max_speed2,
        endpoint_spread=endpoint_spread,
        base_spread=base_spread,
        breaches=breaches,
    )

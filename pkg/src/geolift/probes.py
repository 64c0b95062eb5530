"""Empirical certification of properness, pseudoconvexity and disprisonment
for cone-specified geodesic families.

Every verdict is evidence or a witness, never a proof: properness-type
statements cannot be verified by sampling, only refuted by a concrete
witness or supported by bounds that stay put while sampling budgets double.
The stability rule is fixed: a bound is stable when two successive budget
doublings change it by less than 5 percent.

Witnesses are re-validated by fresh integrations at tighter tolerance
before a report is finalized; a witness that fails re-validation downgrades
the verdict to inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import PreconditionError, UnsupportedOperationError
from .integrate import (
    BLOW_UP,
    DEFAULT_OPTIONS,
    DOMAIN_ESCAPE,
    REACHED_TARGET,
    IntegratorOptions,
    integrate_geodesic,
)
from .manifolds import (
    NULL,
    TIMELIKE,
    ManifoldSpec,
    TangentVector,
    aux_norm_at,
    causal_character,
    unit_ray,
)

__all__ = [
    "ConeSpec",
    "BallSpec",
    "ProbeBudgets",
    "ProbeReport",
    "ConsistencyReport",
    "properness_probe",
    "imprisonment_scan",
    "pseudoconvexity_scan",
    "properness_consistency_check",
    "EVIDENCE_PROPER",
    "WITNESS_NONPROPER",
    "EVIDENCE_PSEUDOCONVEX",
    "WITNESS_ESCAPE",
    "EVIDENCE_DISPRISONING",
    "WITNESS_IMPRISONED",
    "INCONCLUSIVE",
]

EVIDENCE_PROPER = "evidence-proper"
WITNESS_NONPROPER = "witness-nonproper"
EVIDENCE_PSEUDOCONVEX = "evidence-pseudoconvex"
WITNESS_ESCAPE = "witness-escape"
EVIDENCE_DISPRISONING = "evidence-disprisoning"
WITNESS_IMPRISONED = "witness-imprisoned"
INCONCLUSIVE = "inconclusive"

STABILITY_REL = 0.05

_PROBE_OPTIONS = IntegratorOptions(rel_tol=1e-9, abs_tol=1e-11)


@dataclass(frozen=True)
class ConeSpec:
    """The vector family C: everything, or the rays at a point filtered by
    causal character. Nonzero scalings of members stay members wherever exp
    is defined, and the zero vector over each member base is a member."""

    kind: str  # "all" | "at_point" | "timelike_at" | "null_at" | "causal_at"
    p: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("all", "at_point", "timelike_at", "null_at", "causal_at"):
            raise PreconditionError(f"unknown cone kind {self.kind!r}")
        if self.kind != "all" and self.p is None:
            raise PreconditionError(f"cone kind {self.kind!r} needs a base point")
        if self.p is not None:
            object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @property
    def rooted(self) -> bool:
        return self.kind != "all"

    def contains(self, M: ManifoldSpec, tv: TangentVector, tol: float = 1e-9) -> bool:
        if self.kind == "all":
            return True
        if float(np.linalg.norm(M.delta(tv.base, self.p))) > 1e-9:
            return False
        if self.kind == "at_point":
            return True
        if aux_norm_at(M, tv.base, tv.components) <= 1e-13:
            return True  # the zero vector over p belongs to every cone here
        ch = causal_character(M, tv, tol)
        if self.kind == "timelike_at":
            return ch.tag == TIMELIKE
        if self.kind == "null_at":
            return ch.tag == NULL
        return ch.is_causal


@dataclass(frozen=True)
class BallSpec:
    """Closed chart-distance ball; the compact sets K of the probes."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0.0:
            raise PreconditionError("ball radius must be positive")

    def contains(self, M: ManifoldSpec, x: np.ndarray, slack: float = 0.0) -> bool:
        return M.distance(x, self.center) <= self.radius + slack


@dataclass(frozen=True)
class ProbeBudgets:
    n_rays: int = 32
    n_scale: int = 192
    scale_max: float = 8.0
    doublings: int = 2

    def level(self, lvl: int) -> "ProbeBudgets":
        return ProbeBudgets(
            n_rays=self.n_rays * (1 << lvl),
            n_scale=self.n_scale * (1 << lvl),
            scale_max=self.scale_max * (1 << lvl),
            doublings=self.doublings,
        )


@dataclass
class ProbeReport:
    verdict: str
    witness: Optional[list] = None
    parameters: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    seed: int = 0

    def to_jsonable(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": self.witness,
            "parameters": self.parameters,
            "history": self.history,
            "seed": self.seed,
        }


# ---------------------------------------------------------------------------
# cone ray sampling
# ---------------------------------------------------------------------------


def _causal_wedges(M: ManifoldSpec, p: np.ndarray):
    """Angle intervals (around both cone axes) of causal chart directions."""
    g = M.metric(M.wrap(p))

    def q_of(theta):
        u = unit_ray(M, p, np.array([math.cos(theta), math.sin(theta)])).components
        return float(u @ g @ u)

    t_axis = M.time_orientation(M.wrap(p)) if M.time_orientation is not None else None
    if t_axis is None:
        raise UnsupportedOperationError("causal cone sampling needs a time orientation")
    theta0 = math.atan2(t_axis[1], t_axis[0])
    if q_of(theta0) >= 0.0:
        raise UnsupportedOperationError("time orientation is not timelike here")

    def first_crossing(side):
        # walk away from the timelike axis until g(u,u) turns nonnegative,
        # then bisect: brackets the null boundary on this side of the cone
        prev = 0.0
        for k in range(1, 257):
            a = side * math.pi * k / 256.0
            if q_of(theta0 + a) >= 0.0:
                lo_b, hi_b = (prev, a) if side > 0 else (a, prev)
                return brentq(lambda b: q_of(theta0 + b), lo_b, hi_b, xtol=1e-14)
            prev = a
        raise UnsupportedOperationError("no spacelike chart direction found")

    lo = first_crossing(-1.0)
    hi = first_crossing(+1.0)
    return theta0, lo, hi


def sample_cone_rays(
    M: ManifoldSpec,
    cone: ConeSpec,
    n_rays: int,
    rng: np.random.Generator,
) -> list[TangentVector]:
    """h-unit rays spanning the cone at its base point.

    Deterministic coverage (axis directions, cone boundaries, even angle
    grids) is topped up with seeded random directions so budget doublings
    genuinely explore new rays.
    """
    if not cone.rooted:
        raise PreconditionError("ray sampling needs a rooted cone")
    p = cone.p
    if M.dim != 2 and cone.kind != "at_point":
        raise UnsupportedOperationError("metric cones are sampled in dim 2 only")

    dirs: list[np.ndarray] = []
    if cone.kind == "at_point":
        if M.dim == 2:
            base_angles = [2.0 * math.pi * k / n_rays for k in range(n_rays)]
            dirs = [np.array([math.cos(a), math.sin(a)]) for a in base_angles]
            for axis in range(2):
                for sign in (1.0, -1.0):
                    e = np.zeros(2)
                    e[axis] = sign
                    dirs.append(e)
        else:
            for axis in range(M.dim):
                for sign in (1.0, -1.0):
                    e = np.zeros(M.dim)
                    e[axis] = sign
                    dirs.append(e)
            while len(dirs) < n_rays:
                d = rng.normal(size=M.dim)
                n = float(np.linalg.norm(d))
                if n > 1e-12:
                    dirs.append(d / n)
    else:
        theta0, lo, hi = _causal_wedges(M, p)
        if cone.kind == "null_at":
            angle_sets = [theta0 + lo, theta0 + hi, theta0 + math.pi + lo, theta0 + math.pi + hi]
            dirs = [np.array([math.cos(a), math.sin(a)]) for a in angle_sets]
        else:
            shrink = 1e-6 if cone.kind == "timelike_at" else 0.0
            span = (hi - lo) * (1.0 - shrink)
            mid = theta0 + 0.5 * (lo + hi)
            n_half = max(n_rays // 2, 2)
            for base in (mid, mid + math.pi):  # both causal cones
                for k in range(n_half):
                    a = base - span / 2.0 + span * k / (n_half - 1)
                    dirs.append(np.array([math.cos(a), math.sin(a)]))
    return [unit_ray(M, p, d) for d in dirs]


def _geometric_grid(t_min: float, t_max: float, n: int) -> np.ndarray:
    if t_max <= t_min:
        return np.array([t_max])
    return np.geomspace(t_min, t_max, n)


def _stable(history: list[float]) -> bool:
    if len(history) < 3:
        return False
    a, b, c = history[-3], history[-2], history[-1]
    ref = max(abs(b), 1e-12)
    return abs(b - a) <= STABILITY_REL * ref and abs(c - b) <= STABILITY_REL * ref


def _growing(history: list[float]) -> bool:
    if len(history) < 3:
        return False
    a, b, c = history[-3], history[-2], history[-1]
    return c > 1.5 * b > 2.0 * a * 0.75 and c > 0.0


# ---------------------------------------------------------------------------
# properness
# ---------------------------------------------------------------------------


def properness_probe(
    M: ManifoldSpec,
    cone: ConeSpec,
    ball: BallSpec,
    budgets: ProbeBudgets = ProbeBudgets(),
    opts: IntegratorOptions = _PROBE_OPTIONS,
    seed: int = 0,
) -> ProbeReport:
    """Probe whether exp restricted to the cone pulls the ball back to a
    bounded vector set.

    Rays are h-unit cone members; along each, parameters on a geometric grid
    are collected when the geodesic sits inside the ball. If the largest
    collected h-norm keeps climbing as budgets double while images stay in
    the ball, that sequence is a nonproperness witness; if it saturates, the
    probe reports properness evidence.
    """
    rng = np.random.default_rng(seed)
    if cone.rooted:
        bases = [cone.p]
    else:
        bases = _base_grid(M, ball, budgets.n_rays // 4 + 4, rng)

    history = []
    far: list[tuple[TangentVector, float]] = []
    for lvl in range(budgets.doublings + 1):
        lb = budgets.level(lvl)
        bound = 0.0
        far = []
        for base in bases:
            cone_l = cone if cone.rooted else ConeSpec("at_point", base)
            rays = sample_cone_rays(M, cone_l, lb.n_rays, rng)
            for w in rays:
                path = integrate_geodesic(M, base, w.components, lb.scale_max, opts)
                horizon = path.t_end
                for t in _geometric_grid(1e-3, horizon, lb.n_scale):
                    x, _ = path.at(float(t))
                    if ball.contains(M, x):
                        if t > bound:
                            bound = float(t)
                        far.append((w, float(t)))
        far.sort(key=lambda item: -item[1])
        far = far[:16]
        history.append(bound)

    params = {
        "ball_center": list(map(float, ball.center)),
        "ball_radius": ball.radius,
        "budgets": vars(budgets),
    }
    if _stable(history):
        return ProbeReport(EVIDENCE_PROPER, None, params, history, seed)
    if _growing(history):
        witness = _revalidate_properness_witness(M, ball, far, opts)
        if witness:
            return ProbeReport(WITNESS_NONPROPER, witness, params, history, seed)
    return ProbeReport(INCONCLUSIVE, None, params, history, seed)


def _base_grid(M, ball, n, rng):
    """Points of the ball (intersected with the domain) for unrooted cones:
    deterministic rings out to the rim, topped up with seeded samples."""
    pts = [ball.center] if M.in_domain(ball.center) else []
    ring = 0
    while len(pts) < n and ring < 4 * n:
        ring += 1
        frac = 1.0 - 0.5 ** ring if ring <= 6 else 1.0
        r = ball.radius * min(frac + 0.0, 1.0)
        for k in range(6):
            a = 2.0 * math.pi * (k + 0.5 * (ring % 2)) / 6.0
            x = ball.center + r * np.array([math.cos(a), math.sin(a)])
            if M.in_domain(x):
                pts.append(x)
        if ring >= 6:
            r = ball.radius * math.sqrt(rng.uniform())
            a = rng.uniform(0.0, 2.0 * math.pi)
            x = ball.center + r * np.array([math.cos(a), math.sin(a)])
            if M.in_domain(x):
                pts.append(x)
    if not pts:
        raise PreconditionError("no base points of the ball lie in the domain")
    return pts[:n]


def _revalidate_properness_witness(M, ball, far, opts):
    tight = IntegratorOptions(rel_tol=opts.rel_tol * 0.1, abs_tol=opts.abs_tol * 0.1)
    out = []
    for w, t in far[:8]:
        path = integrate_geodesic(M, w.base, w.components, t, tight)
        if path.termination == REACHED_TARGET and ball.contains(M, path.points[-1], 1e-6):
            out.append(
                {
                    "base": list(map(float, w.base)),
                    "direction": list(map(float, w.components)),
                    "parameter": t,
                }
            )
    return out


# ---------------------------------------------------------------------------
# disprisonment
# ---------------------------------------------------------------------------


def imprisonment_scan(
    M: ManifoldSpec,
    cone: ConeSpec,
    n_rays: int = 32,
    t_horizon: float = 20.0,
    bound_radius: float = 1.0,
    opts: IntegratorOptions = _PROBE_OPTIONS,
    seed: int = 0,
) -> ProbeReport:
    """Look for trapped directions among the cone's maximal geodesics.

    A direction is disprisoned when its maximal extension demonstrably
    leaves every ball: it escapes the domain or blows up (its closure in
    the manifold is then not compact) or it runs farther than bound_radius
    from its start. A direction that stays bounded and returns to its
    initial state is a closed geodesic: an imprisonment witness. Bounded,
    non-recurrent directions at the probe horizon leave the scan
    inconclusive.
    """
    rng = np.random.default_rng(seed)
    if cone.rooted:
        rays = sample_cone_rays(M, cone, n_rays, rng)
    else:
        # the all-geodesics cone: rays from a base grid around the chart
        # origin at the scale of the trapping radius
        rays = []
        region = BallSpec(np.zeros(M.dim), max(bound_radius, 1.0))
        for base in _base_grid(M, region, max(4, n_rays // 8), rng):
            rays.extend(sample_cone_rays(M, ConeSpec("at_point", base), 8, rng))
    witnesses = []
    all_disprisoned = True
    for w in rays:
        for sign in (+1.0, -1.0):
            v = sign * w.components
            path = integrate_geodesic(M, w.base, v, t_horizon, opts)
            if path.termination in (DOMAIN_ESCAPE, BLOW_UP):
                continue  # not trapped: no compact closure in the manifold
            if path.termination != REACHED_TARGET:
                all_disprisoned = False
                continue
            grid = np.linspace(0.0, path.t_end, max(256, int(16 * path.t_end)))
            extent = max(M.distance(path.at(float(t))[0], w.base) for t in grid)
            if extent > bound_radius:
                continue
            all_disprisoned = False
            t_rec = _recurrence_time(M, path, w.base, v, grid)
            if t_rec is not None and _revalidate_recurrence(M, w.base, v, t_rec, opts):
                witnesses.append(
                    {
                        "base": list(map(float, w.base)),
                        "direction": list(map(float, v)),
                        "period": t_rec,
                    }
                )
    params = {"n_rays": n_rays, "t_horizon": t_horizon, "bound_radius": bound_radius}
    if witnesses:
        return ProbeReport(WITNESS_IMPRISONED, witnesses, params, [], seed)
    if all_disprisoned:
        return ProbeReport(EVIDENCE_DISPRISONING, None, params, [], seed)
    return ProbeReport(INCONCLUSIVE, None, params, [], seed)


def _recurrence_time(M, path, x0, v0, grid, tol=1e-5):
    from scipy.optimize import minimize_scalar

    speed = float(np.linalg.norm(v0)) + 1e-30
    t_min = 0.5 / speed

    def gap(t):
        x, xd = path.at(float(t))
        return M.distance(x, x0) + float(np.linalg.norm(xd - v0))

    ts = [float(t) for t in grid if t >= t_min]
    if len(ts) < 3:
        return None
    vals = [gap(t) for t in ts]
    spacing = ts[1] - ts[0]
    gate = 2.0 * spacing * (speed + 1.0)
    for i in range(1, len(ts) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1] and vals[i] < gate:
            r = minimize_scalar(
                gap, bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                options={"xatol": 1e-12},
            )
            if r.fun < tol:
                return float(r.x)
    return None


def _revalidate_recurrence(M, x0, v0, t_rec, opts):
    tight = IntegratorOptions(rel_tol=opts.rel_tol * 0.1, abs_tol=opts.abs_tol * 0.1)
    path = integrate_geodesic(M, x0, v0, t_rec, tight)
    if path.termination != REACHED_TARGET:
        return False
    x, xd = path.end_state()
    return M.distance(x, x0) + float(np.linalg.norm(xd - v0)) < 1e-4


# ---------------------------------------------------------------------------
# pseudoconvexity
# ---------------------------------------------------------------------------


def pseudoconvexity_scan(
    M: ManifoldSpec,
    cone: ConeSpec,
    ball: BallSpec,
    n_segments: int = 32,
    opts: IntegratorOptions = _PROBE_OPTIONS,
    seed: int = 0,
    t_horizon: Optional[float] = None,
    doublings: int = 2,
) -> ProbeReport:
    """Measure how far cone geodesic segments with endpoints in the ball
    stray, and whether they accumulate on the domain boundary.

    For a rooted cone the family is sampled by rays from the root; for the
    all-geodesics cone, by rays from a sampled base grid in the ball. Each
    ray's segment runs from its first to its last ball visit. Two failure
    modes produce an escape witness: excursions that keep growing under
    budget doubling, and segments whose clearance from the excised set
    keeps shrinking toward zero (the compact envelope would have to touch
    the boundary, which no compact subset of the manifold does).
    """
    rng = np.random.default_rng(seed)
    if t_horizon is None:
        root = cone.p if cone.rooted else ball.center
        t_horizon = 4.0 * (ball.radius + M.distance(root, ball.center) + 1.0)

    excursions = []
    clearances = []
    worst: list[dict] = []
    for lvl in range(doublings + 1):
        n_l = n_segments * (1 << lvl)
        if cone.rooted:
            rays = sample_cone_rays(M, cone, n_l, rng)
        else:
            rays = []
            for base in _base_grid(M, ball, max(4, n_l // 8), rng):
                rays.extend(sample_cone_rays(M, ConeSpec("at_point", base), 8, rng))
        exc = 0.0
        clear = math.inf
        worst = []
        for w in rays:
            for sign in (+1.0, -1.0):
                v = sign * w.components
                path = integrate_geodesic(M, w.base, v, t_horizon, opts)
                seg = _ball_segment(M, path, ball)
                if seg is None:
                    continue
                t_in, t_out, seg_exc, seg_clear = seg
                exc = max(exc, seg_exc)
                clear = min(clear, seg_clear)
                worst.append(
                    {
                        "base": list(map(float, w.base)),
                        "direction": list(map(float, v)),
                        "t_in": t_in,
                        "t_out": t_out,
                        "excursion": seg_exc,
                        "clearance": seg_clear,
                    }
                )
        excursions.append(exc)
        clearances.append(clear if clear < math.inf else -1.0)

    params = {
        "ball_center": list(map(float, ball.center)),
        "ball_radius": ball.radius,
        "n_segments": n_segments,
        "t_horizon": t_horizon,
    }
    history = [
        {"excursion": e, "clearance": c} for e, c in zip(excursions, clearances)
    ]

    # segments hugging the excised set cannot sit inside any compact subset
    # of the manifold; clearance at the scale of the detection margin is the
    # boundary-accumulation form of the escape witness
    boundary_accumulation = (
        M.domain_distance is not None
        and clearances[-1] >= 0.0
        and clearances[-1] < 0.02 * ball.radius
    )
    if _growing(excursions) or boundary_accumulation:
        witness = sorted(worst, key=lambda s: s["clearance"])[:8]
        witness = _revalidate_segments(M, ball, witness, opts, t_horizon)
        if witness:
            return ProbeReport(WITNESS_ESCAPE, witness, params, history, seed)
    if _stable(excursions) and not boundary_accumulation:
        return ProbeReport(EVIDENCE_PSEUDOCONVEX, None, params, history, seed)
    return ProbeReport(INCONCLUSIVE, None, params, history, seed)


def _ball_segment(M, path, ball, n_grid=512):
    """First-to-last ball visit along the path: (t_in, t_out, excursion,
    boundary clearance), or None if fewer than two dense samples visit."""
    grid = np.linspace(0.0, path.t_end, max(n_grid, int(16 * path.t_end)))
    pts = [path.at(float(t))[0] for t in grid]
    inside = [i for i, x in enumerate(pts) if ball.contains(M, x)]
    if len(inside) < 2:
        return None
    i0, i1 = inside[0], inside[-1]
    if i1 <= i0:
        return None
    seg_pts = pts[i0 : i1 + 1]
    exc = max(0.0, max(M.distance(x, ball.center) for x in seg_pts) - ball.radius)
    if M.domain_distance is not None:
        clear = min(M.domain_distance(M.wrap(x)) for x in seg_pts)
    else:
        clear = math.inf
    return float(grid[i0]), float(grid[i1]), float(exc), float(clear)


def _revalidate_segments(M, ball, witness, opts, t_horizon):
    tight = IntegratorOptions(rel_tol=opts.rel_tol * 0.1, abs_tol=opts.abs_tol * 0.1)
    out = []
    for s in witness:
        path = integrate_geodesic(
            M, np.array(s["base"]), np.array(s["direction"]), t_horizon, tight
        )
        seg = _ball_segment(M, path, ball)
        if seg is not None:
            out.append({**s, "excursion": seg[2], "clearance": seg[3]})
    return out


# ---------------------------------------------------------------------------
# the biconditional check
# ---------------------------------------------------------------------------


@dataclass
class ConsistencyReport:
    proper: ProbeReport
    pseudoconvex: ProbeReport
    disprisoning: ProbeReport
    consistent: Optional[bool]
    conflicts: list = field(default_factory=list)

    @property
    def verdicts(self) -> tuple[str, str, str]:
        return (
            self.proper.verdict,
            self.pseudoconvex.verdict,
            self.disprisoning.verdict,
        )

    def to_jsonable(self) -> dict:
        return {
            "proper": self.proper.to_jsonable(),
            "pseudoconvex": self.pseudoconvex.to_jsonable(),
            "disprisoning": self.disprisoning.to_jsonable(),
            "consistent": self.consistent,
            "conflicts": self.conflicts,
        }


_BOOL_OF = {
    EVIDENCE_PROPER: True,
    WITNESS_NONPROPER: False,
    EVIDENCE_PSEUDOCONVEX: True,
    WITNESS_ESCAPE: False,
    EVIDENCE_DISPRISONING: True,
    WITNESS_IMPRISONED: False,
    INCONCLUSIVE: None,
}


def properness_consistency_check(
    M: ManifoldSpec,
    cone: ConeSpec,
    ball: BallSpec,
    budgets: ProbeBudgets = ProbeBudgets(),
    opts: IntegratorOptions = _PROBE_OPTIONS,
    seed: int = 0,
) -> ConsistencyReport:
    """Run all three probes and check the biconditional empirically:
    exp restricted to the cone is proper iff the family is pseudoconvex
    and disprisoning.

    Restricted to cones rooted at a point (so the zero-section slice of the
    cone is the single compact point needed for the converse direction).
    A contradiction is flagged as a probe-budget artifact with the
    conflicting witnesses attached, not as a mathematical finding.
    """
    if not cone.rooted:
        raise PreconditionError("the consistency check needs a cone rooted at a point")
    rep_p = properness_probe(M, cone, ball, budgets, opts, seed)
    rep_c = pseudoconvexity_scan(
        M, cone, ball, n_segments=budgets.n_rays, opts=opts, seed=seed + 1,
        doublings=budgets.doublings,
    )
    horizon = budgets.scale_max * (1 << budgets.doublings)
    rep_d = imprisonment_scan(
        M,
        cone,
        n_rays=budgets.n_rays,
        t_horizon=horizon,
        bound_radius=max(2.0 * ball.radius, 0.25 * horizon),
        opts=opts,
        seed=seed + 2,
    )
    bp = _BOOL_OF[rep_p.verdict]
    bc = _BOOL_OF[rep_c.verdict]
    bd = _BOOL_OF[rep_d.verdict]
    conflicts = []
    if bp is None or (bc is None and bd is not False) or (bd is None and bc is not False):
        consistent = None
    else:
        rhs = (bc and bd) if (bc is not None and bd is not None) else False
        consistent = bp == rhs
        if not consistent:
            conflicts = [
                {"probe": "properness", "verdict": rep_p.verdict, "witness": rep_p.witness},
                {"probe": "pseudoconvexity", "verdict": rep_c.verdict, "witness": rep_c.witness},
                {"probe": "disprisonment", "verdict": rep_d.verdict, "witness": rep_d.witness},
            ]
    return ConsistencyReport(rep_p, rep_c, rep_d, consistent, conflicts)

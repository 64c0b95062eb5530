"""Lifting paths through the exponential map by predictor-corrector
continuation.

Given a path alpha in M with alpha(0) = exp_p(v0), the lift advances a curve
v(t) in T_pM with exp_p(v(t)) = alpha(t). Each continuation step predicts
v + dt * dexp^{-1} alpha', then corrects with damped Newton on the residual
exp_p(v) - alpha(t), using the co-integrated Jacobi matrix as the Jacobian.

A lift that cannot reach t = 1 is classified by what stopped it:

  conjugate_singularity  |det dexp| collapsed near the stall
  domain_escape          corrector iterates left the maximal exp domain
  step_collapse          steps shrank below dt_min with bounded iterates
                         (the bounded tail is reported as cluster_point)
  residual_divergence    none of the above

The distinction matters: a conjugate obstruction and a domain escape are
different geometric failure modes and downstream diagnostics must be able to
tell them apart. Ambiguous stalls (singular AND escaping) report
step_collapse with both facts attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConeBreachError, ExpMapError, PreconditionError, UnsupportedOperationError
from .integrate import (
    DEFAULT_OPTIONS,
    REACHED_TARGET,
    IntegratorOptions,
    integrate_geodesic,
)
from .jacobi import SINGULAR_REL_THRESHOLD, exp_and_dexp
from .manifolds import (
    NULL,
    TIMELIKE,
    ManifoldSpec,
    TangentVector,
    aux_norm_at,
    causal_character,
)

__all__ = [
    "PathSpec",
    "LiftOptions",
    "LiftResult",
    "lift_path",
    "causal_lift",
    "straight_path",
    "polyline_path",
    "validate_path",
    "COMPLETE",
    "FAILED",
    "CONJUGATE_SINGULARITY",
    "DOMAIN_ESCAPE_FAILURE",
    "STEP_COLLAPSE_FAILURE",
    "RESIDUAL_DIVERGENCE",
]

COMPLETE = "complete"
FAILED = "failed"
CONJUGATE_SINGULARITY = "conjugate_singularity"
DOMAIN_ESCAPE_FAILURE = "domain_escape"
STEP_COLLAPSE_FAILURE = "step_collapse"
RESIDUAL_DIVERGENCE = "residual_divergence"


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-smooth path [0,1] -> chart, with optional causal tag.

    eval_dot must return the right-hand derivative at break parameters.
    When causal_tag is set ("timelike" or "causal") the tangent is asserted
    to have that character wherever it is sampled, and at breaks both lateral
    tangents must sit in the same cone component.
    """

    eval: Callable[[float], np.ndarray]
    eval_dot: Callable[[float], np.ndarray]
    breaks: tuple[float, ...] = ()
    causal_tag: Optional[str] = None


def straight_path(a: np.ndarray, b: np.ndarray, causal_tag: Optional[str] = None) -> PathSpec:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    return PathSpec(
        eval=lambda t: a + t * d,
        eval_dot=lambda t: d,
        breaks=(),
        causal_tag=causal_tag,
    )


def polyline_path(points: list[np.ndarray], causal_tag: Optional[str] = None) -> PathSpec:
    """Piecewise-linear path through the given chart points, one equal
    parameter interval per leg, with breaks at the joints."""
    pts = [np.asarray(q, dtype=float) for q in points]
    if len(pts) < 2:
        raise PreconditionError("polyline needs at least two points")
    n = len(pts) - 1
    legs = [pts[i + 1] - pts[i] for i in range(n)]

    def ev(t):
        s = min(max(t, 0.0), 1.0) * n
        i = min(int(s), n - 1)
        return pts[i] + (s - i) * legs[i]

    def ev_dot(t):
        s = min(max(t, 0.0), 1.0) * n
        i = min(int(s), n - 1)
        return float(n) * legs[i]

    breaks = tuple(i / n for i in range(1, n))
    return PathSpec(eval=ev, eval_dot=ev_dot, breaks=breaks, causal_tag=causal_tag)


def validate_path(
    M: ManifoldSpec,
    path: PathSpec,
    n_check: int = 65,
    tol_causal: float = 1e-9,
) -> None:
    """Sampled validation of the PathSpec invariants; raises on violation."""
    ts = np.linspace(0.0, 1.0, n_check)
    for t in ts:
        x = path.eval(float(t))
        if not M.in_domain(x):
            raise PreconditionError(f"path leaves the domain at t={t:.4g}: {x}")
    if path.causal_tag is None:
        return
    if M.metric is None:
        raise UnsupportedOperationError("causal_tag requires a metric")
    orientations = set()
    check_ts = [t for t in ts if all(abs(t - b) > 1e-9 for b in path.breaks)]
    for t in check_ts:
        x = path.eval(float(t))
        d = path.eval_dot(float(t))
        ch = causal_character(M, TangentVector(x, d), tol_causal)
        if path.causal_tag == TIMELIKE and ch.tag != TIMELIKE:
            raise PreconditionError(f"path tangent not timelike at t={t:.4g} ({ch.tag})")
        if path.causal_tag == "causal" and not ch.is_causal:
            raise PreconditionError(f"path tangent not causal at t={t:.4g} ({ch.tag})")
        if ch.orientation is not None:
            orientations.add(ch.orientation)
    if len(orientations) > 1:
        raise PreconditionError("path tangents change cone component")
    for b in path.breaks:
        left = path.eval_dot(max(b - 1e-9, 0.0))
        right = path.eval_dot(min(b + 1e-9, 1.0))
        x = path.eval(b)
        cl = causal_character(M, TangentVector(x, left), tol_causal)
        cr = causal_character(M, TangentVector(x, right), tol_causal)
        if cl.orientation != cr.orientation:
            raise PreconditionError(
                f"lateral tangents at break t={b:.4g} lie in different cone components"
            )


@dataclass(frozen=True)
class LiftOptions:
    lift_tol: float = 1e-7
    dt_init: float = 0.02
    dt_min: float = 1e-9
    dt_max: float = 0.05
    newton_max: int = 8
    cluster_radius: float = 1e-4
    max_steps: int = 20_000


DEFAULT_LIFT_OPTIONS = LiftOptions()

# The corrector converges to 0.3 * lift_tol, so integration errors well
# below that are invisible; 1e-9 keeps endpoint errors near 1e-9.
LIFT_INTEGRATOR_DEFAULTS = IntegratorOptions(rel_tol=1e-9, abs_tol=1e-11)


@dataclass
class LiftResult:
    status: str
    p: np.ndarray
    ts: np.ndarray
    vs: np.ndarray
    reach: float
    failure: Optional[str] = None
    cluster_point: Optional[TangentVector] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.status == COMPLETE

    @property
    def samples(self) -> list[tuple[float, TangentVector]]:
        return [(float(t), TangentVector(self.p, v)) for t, v in zip(self.ts, self.vs)]

    def v_at(self, t: float) -> np.ndarray:
        """Linear interpolation of the lifted curve between accepted steps."""
        ts = self.ts
        if t <= ts[0]:
            return self.vs[0].copy()
        if t >= ts[-1]:
            return self.vs[-1].copy()
        i = int(np.searchsorted(ts, t, side="right") - 1)
        h = ts[i + 1] - ts[i]
        s = 0.0 if h == 0.0 else (t - ts[i]) / h
        return (1.0 - s) * self.vs[i] + s * self.vs[i + 1]

    @property
    def endpoint(self) -> TangentVector:
        return TangentVector(self.p, self.vs[-1])


class _Corrector:
    """Damped Newton on exp_p(v) = target.

    Residuals come from plain geodesic integrations at full accuracy; the
    Jacobian comes from a co-integration at much looser tolerance, refreshed
    every iteration. A percent-level Jacobian costs a fraction of an
    accurate one and still gives (near-)quadratic convergence, so the total
    integration work per corrector call stays small.
    """

    def __init__(self, M, p, iopts, newton_max, tol):
        self.M = M
        self.p = p
        # corrector evaluations never legitimately need huge integrations;
        # bounding them keeps one wild iterate from stalling the whole lift
        self.iopts = IntegratorOptions(
            rel_tol=iopts.rel_tol,
            abs_tol=iopts.abs_tol,
            max_steps=min(iopts.max_steps, 20_000),
            min_step=iopts.min_step,
            domain_margin=iopts.domain_margin,
            guard_position=iopts.guard_position,
            guard_velocity=iopts.guard_velocity,
        )
        self.jac_opts = IntegratorOptions(
            rel_tol=1e-5,
            abs_tol=1e-8,
            max_steps=self.iopts.max_steps,
            min_step=iopts.min_step,
            domain_margin=iopts.domain_margin,
            guard_position=iopts.guard_position,
            guard_velocity=iopts.guard_velocity,
        )
        self.newton_max = newton_max
        self.tol = tol
        self.last_exp_error: Optional[ExpMapError] = None
        self.last_iterates: list[np.ndarray] = []
        self.crossed_singular = False

    def exp_plain(self, v):
        if float(np.max(np.abs(v))) == 0.0:
            return self.p.copy()
        path = integrate_geodesic(self.M, self.p, v, 1.0, self.iopts, store=False)
        if path.termination != REACHED_TARGET:
            raise ExpMapError(
                f"v outside the maximal exp domain: {path.termination} "
                f"at t={path.t_end:.6g}",
                path=path,
            )
        return path.points[-1].copy()

    def jacobian(self, v):
        _, D = exp_and_dexp(self.M, self.p, v, self.jac_opts)
        return D

    def run(self, v_start, target, A):
        """Returns (v, x, D, residual_norm, iterations) or None on failure."""
        self.last_exp_error = None
        self.last_iterates = [np.asarray(v_start, dtype=float)]
        self.crossed_singular = False
        v = np.asarray(v_start, dtype=float)
        try:
            x = self.exp_plain(v)
        except ExpMapError as e:
            self.last_exp_error = e
            return None
        r = x - target
        rn = float(np.linalg.norm(r))
        D = A
        stalls = 0
        # trust region: one continuation step never needs corrections beyond
        # this; reaching for more means the local model broke down
        trust = 1.0 + 0.25 * float(np.linalg.norm(v))
        for it in range(self.newton_max + 1):
            if rn <= self.tol:
                if it == 0:
                    # never hand a stale Jacobian back: the continuation's
                    # singular-set detection relies on fresh determinants
                    try:
                        D = self.jacobian(v)
                    except ExpMapError as e:
                        self.last_exp_error = e
                        return None
                    if D.det * A.det < 0.0:
                        self.crossed_singular = True
                        return None
                return v, x, D, rn, it
            if it == self.newton_max:
                break
            if it > 0:
                try:
                    D = self.jacobian(v)
                except ExpMapError as e:  # pragma: no cover - plain eval passed
                    self.last_exp_error = e
                    return None
                if D.det * A.det < 0.0:
                    # the iterate slipped across the singular set of exp_p;
                    # abort fast, the caller localizes the crossing
                    self.crossed_singular = True
                    return None
            try:
                step = np.linalg.solve(D.matrix, -r)
            except np.linalg.LinAlgError:
                return None
            # a near-singular Jacobian blows the step up; such a target is
            # not reachable by a trustworthy correction from here
            if float(np.linalg.norm(step)) > 10.0 * (1.0 + float(np.linalg.norm(v))):
                return None
            lam = 1.0
            while True:
                vt = v + lam * step
                if float(np.linalg.norm(vt - self.last_iterates[0])) > trust:
                    if lam <= 1.0 / 16.0:
                        return None
                    lam *= 0.5
                    continue
                try:
                    xt = self.exp_plain(vt)
                except ExpMapError as e:
                    # escapes while stepping toward the target are a strong
                    # signal the target is unreachable; only back off twice
                    self.last_exp_error = e
                    if lam <= 0.25:
                        return None
                    lam *= 0.5
                    continue
                rt = xt - target
                rtn = float(np.linalg.norm(rt))
                if rtn < rn or lam <= 1.0 / 16.0:
                    stalls = stalls + 1 if rtn >= 0.9 * rn else 0
                    v, x, r, rn = vt, xt, rt, rtn
                    self.last_iterates.append(v.copy())
                    break
                lam *= 0.5
            if stalls >= 2:
                return None
            if it >= 3 and rn > 100.0 * self.tol:
                return None  # no contraction in sight, the step must shrink
        return None


def lift_path(
    M: ManifoldSpec,
    p: np.ndarray,
    path: PathSpec,
    v0: np.ndarray,
    opts: LiftOptions = DEFAULT_LIFT_OPTIONS,
    iopts: IntegratorOptions = LIFT_INTEGRATOR_DEFAULTS,
) -> LiftResult:
    """Lift the path through exp_p starting from lift value v0."""
    p = np.asarray(p, dtype=float)
    v0 = np.asarray(v0, dtype=float)

    try:
        x0, D0 = exp_and_dexp(M, p, v0, iopts)
    except ExpMapError as e:
        raise PreconditionError(f"v0 is outside the exp domain: {e}") from e
    r0 = float(np.linalg.norm(x0 - path.eval(0.0)))
    if r0 > opts.lift_tol:
        raise PreconditionError(
            f"exp_p(v0) does not match path start: residual {r0:.3e} > {opts.lift_tol:.1e}"
        )

    boundaries = sorted(b for b in set(path.breaks) if 0.0 < b < 1.0) + [1.0]

    corrector = _Corrector(M, p, iopts, opts.newton_max, 0.3 * opts.lift_tol)
    ts = [0.0]
    vs = [v0.copy()]
    residuals = [r0]
    dets = [D0.det]
    iters_log = [0]

    t = 0.0
    v = v0.copy()
    A = D0
    dt = opts.dt_init
    easy = 0
    det_max = max(1.0, abs(D0.det))
    failure = None
    message = ""
    barrier = None  # smallest t_next refused for crossing the singular set

    def singular_threshold():
        return SINGULAR_REL_THRESHOLD * det_max

    n_steps = 0
    while t < 1.0 - 1e-15:
        n_steps += 1
        if n_steps > opts.max_steps:
            failure = STEP_COLLAPSE_FAILURE
            message = "continuation step budget exhausted"
            break

        next_boundary = next(b for b in boundaries if b > t + 1e-15)
        if barrier is not None:
            # approach a detected singular crossing geometrically
            dt = min(dt, max(0.5 * (barrier - t), opts.dt_min))
        t_next = min(t + dt, next_boundary)
        target = path.eval(t_next)

        # predictor: continuation along the path tangent at the midpoint;
        # a near-singular Jacobian blows the prediction up, in which case
        # starting the corrector from the last accepted value is safer
        v_pred = v
        try:
            t_mid = 0.5 * (t + t_next)
            if any(t < b < t_next for b in path.breaks):
                t_mid = t  # do not sample the tangent across a break
            tangent = path.eval_dot(t_mid)
            pred_step = (t_next - t) * np.linalg.solve(A.matrix, tangent)
            if float(np.linalg.norm(pred_step)) <= 1.0 + 0.25 * float(np.linalg.norm(v)):
                v_pred = v + pred_step
        except np.linalg.LinAlgError:
            pass

        got = corrector.run(v_pred, target, A)
        if got is None and not corrector.crossed_singular and not np.array_equal(v_pred, v):
            got = corrector.run(v, target, A)  # retry from the last accepted value

        if got is None and corrector.crossed_singular:
            barrier = t_next if barrier is None else min(barrier, t_next)
            dt *= 0.5
            if barrier - t >= 1e-4 and dt >= opts.dt_min:
                continue
            failure = CONJUGATE_SINGULARITY
            message = "corrector iterates crossed the singular set of exp_p"
            break

        if got is not None:
            v_new, x_new, D_new, rn, iters = got
            # a det sign flip (or collapse) means the corrector slipped across
            # the singular set of exp_p; a lift must stay where exp_p is a
            # local diffeomorphism, so refuse and let the stall classify it
            if D_new.det * A.det < 0.0 or abs(D_new.det) < singular_threshold():
                # localizing the crossing to ~1e-7 in t is plenty; grinding
                # further just burns near-singular Newton solves
                barrier = t_next if barrier is None else min(barrier, t_next)
                dt *= 0.5
                if barrier - t >= 1e-4 and dt >= opts.dt_min:
                    continue
                failure = CONJUGATE_SINGULARITY
                message = (
                    f"det dexp changed from {A.det:.3e} to {D_new.det:.3e} "
                    "across one step: singular set crossed"
                )
                break
            det_drop = abs(D_new.det) < 0.1 * abs(A.det) if A.det != 0.0 else False
            t, v, A = t_next, v_new, D_new
            ts.append(t)
            vs.append(v.copy())
            residuals.append(rn)
            dets.append(A.det)
            iters_log.append(iters)
            det_max = max(det_max, abs(A.det))
            if det_drop:
                dt = max(dt * 0.5, opts.dt_min)
                easy = 0
            elif iters <= opts.newton_max // 2:
                easy += 1
                if easy >= 3:
                    dt = min(dt * 2.0, opts.dt_max)
                    easy = 0
            else:
                easy = 0
            continue

        # corrector failed: shrink the step or classify the stall
        dt *= 0.5
        if dt >= opts.dt_min:
            continue

        det_at_stall = A.det
        try:  # the running Jacobian may be crude; classify on an accurate one
            _, D_acc = exp_and_dexp(M, p, v, iopts)
            det_at_stall = D_acc.det
        except ExpMapError:
            pass
        singular = abs(det_at_stall) < singular_threshold() or barrier is not None
        escaped = corrector.last_exp_error is not None
        tail = corrector.last_iterates[-3:] + [v]
        clustered = all(
            float(np.linalg.norm(a - tail[-1])) <= opts.cluster_radius for a in tail
        )
        if singular and not escaped:
            failure = CONJUGATE_SINGULARITY
            message = f"|det dexp|={abs(det_at_stall):.3e} below threshold {singular_threshold():.3e}"
        elif escaped and not singular:
            failure = DOMAIN_ESCAPE_FAILURE
            message = f"corrector iterates left the exp domain: {corrector.last_exp_error}"
        elif escaped and singular:
            failure = STEP_COLLAPSE_FAILURE
            message = (
                "ambiguous stall: det below threshold and iterates escaping; "
                f"det={det_at_stall:.3e}, escape={corrector.last_exp_error}"
            )
        elif clustered:
            failure = STEP_COLLAPSE_FAILURE
            message = "step size collapsed with bounded iterates"
        else:
            failure = RESIDUAL_DIVERGENCE
            message = "corrector residual failed to converge"
        break

    status = COMPLETE if t >= 1.0 - 1e-15 else FAILED
    cluster_point = None
    if status == FAILED:
        tail_vs = [np.asarray(a) for a in vs[-4:]] + [
            np.asarray(a) for a in corrector.last_iterates[-2:]
        ]
        if all(
            float(np.linalg.norm(a - tail_vs[-1])) <= opts.cluster_radius for a in tail_vs
        ):
            cluster_point = TangentVector(p, tail_vs[-1])

    return LiftResult(
        status=status,
        p=p,
        ts=np.array(ts),
        vs=np.array(vs),
        reach=float(ts[-1]),
        failure=failure if status == FAILED else None,
        cluster_point=cluster_point,
        diagnostics={
            "message": message,
            "residuals": residuals,
            "dets": dets,
            "newton_iters": iters_log,
            "n_continuation_steps": n_steps,
        },
    )


def causal_lift(
    M: ManifoldSpec,
    p: np.ndarray,
    path: PathSpec,
    opts: LiftOptions = DEFAULT_LIFT_OPTIONS,
    iopts: IntegratorOptions = LIFT_INTEGRATOR_DEFAULTS,
    tol_causal: float = 1e-9,
) -> LiftResult:
    """Lift a causal path starting at p from the zero vector, monitoring the
    causal cone at p.

    Every lifted v(t) with t > 0 must be causal (timelike, for a timelike
    path) and stay in a single timecone; a violation beyond tol_causal is an
    invariant breach and raises ConeBreachError, since it would contradict
    the cone confinement of lifts of timelike curves.
    """
    if M.metric is None or M.signature != "lorentzian":
        raise UnsupportedOperationError("causal_lift needs a Lorentzian manifold")
    if path.causal_tag not in (TIMELIKE, "causal"):
        raise PreconditionError("path must carry a causal_tag")
    p = np.asarray(p, dtype=float)
    start = path.eval(0.0)
    if float(np.linalg.norm(M.delta(p, start))) > opts.lift_tol:
        raise PreconditionError("causal path must start at p")
    validate_path(M, path, tol_causal=tol_causal)

    result = lift_path(M, p, path, np.zeros(M.dim), opts, iopts)

    orientations = set()
    for t, v in zip(result.ts, result.vs):
        if t <= 0.0 or aux_norm_at(M, p, v) <= 10.0 * opts.lift_tol:
            continue
        ch = causal_character(M, TangentVector(p, v), tol_causal)
        ok = ch.tag == TIMELIKE if path.causal_tag == TIMELIKE else ch.is_causal
        if not ok:
            raise ConeBreachError(
                f"lifted vector leaves the causal cone at t={t:.6g} (tag {ch.tag})",
                t=float(t),
                v=v.copy(),
            )
        if ch.orientation is not None:
            orientations.add(ch.orientation)
        if len(orientations) > 1:
            raise ConeBreachError(
                f"lifted vector changed timecone component at t={t:.6g}",
                t=float(t),
                v=v.copy(),
            )
    return result

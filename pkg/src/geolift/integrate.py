"""Geodesic integration: the exponential map and its maximal domain.

The first-order system (x, xdot) is integrated with an embedded adaptive
Dormand-Prince 5(4) pair; dense output between accepted steps is cubic
Hermite on the full state. A trajectory terminates when it

  * reaches the requested parameter           -> "reached_target"
  * leaves the chart domain                   -> "domain_escape"
  * stalls below the minimum step size        -> "step_collapse"
  * trips the position/velocity overflow guard-> "blow_up"

Anything but "reached_target" certifies, numerically, that the initial
velocity scaled to that parameter lies outside the maximal domain of exp.

Domain escapes are localized to within `domain_margin`. Excised thin sets
(like a removed point) are thickened to radius `domain_margin` and, when the
manifold supplies a `domain_distance` bound, the step size is capped so the
trajectory cannot cross the thickened set undetected between two accepted
steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, ExpMapError, PreconditionError
from .manifolds import ManifoldSpec, TangentVector, aux_norm_at

__all__ = [
    "IntegratorOptions",
    "GeodesicPath",
    "MaximalInterval",
    "integrate_geodesic",
    "exp_map",
    "maximal_interval",
    "REACHED_TARGET",
    "DOMAIN_ESCAPE",
    "STEP_COLLAPSE",
    "BLOW_UP",
]

REACHED_TARGET = "reached_target"
DOMAIN_ESCAPE = "domain_escape"
STEP_COLLAPSE = "step_collapse"
BLOW_UP = "blow_up"


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 100_000
    min_step: float = 1e-14
    domain_margin: float = 1e-8
    guard_position: float = 1e7
    guard_velocity: float = 1e8

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "min_step", "domain_margin"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"{name} must be positive")
        if self.max_steps <= 0:
            raise ConfigurationError("max_steps must be positive")
        if self.rel_tol > 1e-3 or self.abs_tol > 1e-3:
            raise ConfigurationError("rel_tol and abs_tol must be <= 1e-3")


DEFAULT_OPTIONS = IntegratorOptions()


# Dormand-Prince 5(4) coefficients (FSAL: stage 7 equals the next step's
# first stage).
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


def _hermite(t, t0, t1, y0, y1, f0, f1):
    """Cubic Hermite interpolation of the state on one accepted step."""
    h = t1 - t0
    if h == 0.0:
        return y0.copy()
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


class _OdeResult:
    __slots__ = ("ts", "ys", "fs", "termination", "t_end", "message")

    def __init__(self, ts, ys, fs, termination, t_end, message=""):
        self.ts = ts
        self.ys = ys
        self.fs = fs
        self.termination = termination
        self.t_end = t_end
        self.message = message


def _integrate_ode(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_max: float,
    opts: IntegratorOptions,
    inside: Optional[Callable[[np.ndarray], bool]] = None,
    step_cap: Optional[Callable[[np.ndarray], float]] = None,
    guard: Optional[Callable[[np.ndarray], bool]] = None,
    store: bool = True,
) -> _OdeResult:
    """Adaptive RK45 over [0, t_max] with dense Hermite output.

    `inside(y)` is checked after every accepted step; on a violation the
    crossing is localized by bisection on the Hermite interpolant and the
    trajectory is truncated there. `step_cap(y)` bounds the next step size
    (used to creep up on thin excised sets). `guard(y)` trips the overflow
    termination.
    """
    y = np.array(y0, dtype=float)
    f = rhs(y)
    t = 0.0
    ts = [0.0]
    ys = [y.copy()]
    fs = [f.copy()]

    def record(t_i, y_i, f_i):
        # store=False keeps only the initial and the latest state
        if store or len(ts) < 2:
            ts.append(t_i)
            ys.append(y_i)
            fs.append(f_i)
        else:
            ts[-1], ys[-1], fs[-1] = t_i, y_i, f_i

    h = min(0.05 * t_max, 0.1 / (1.0 + float(np.max(np.abs(f)))))
    h = max(h, opts.min_step)
    h_max = 0.25 * t_max

    n = y.size
    K = np.empty((7, n))
    termination = None
    message = ""

    for _ in range(opts.max_steps):
        if t >= t_max:
            termination = REACHED_TARGET
            break
        if step_cap is not None:
            cap = step_cap(y)
            if cap < h:
                h = max(cap, opts.min_step)
        if t + h > t_max:
            h = t_max - t

        K[0] = f
        failed_stage = False
        for i in range(1, 6):
            yi = y + h * (_A[i] @ K[:i])
            ki = rhs(yi)
            if not np.all(np.isfinite(ki)):
                failed_stage = True
                break
            K[i] = ki
        if not failed_stage:
            y_new = y + h * (_A[6] @ K[:6])
            f_new = rhs(y_new)  # FSAL: also the propagated derivative
            if not np.all(np.isfinite(f_new)):
                failed_stage = True
            else:
                K[6] = f_new
        if failed_stage:
            h *= 0.25
            if h < opts.min_step:
                termination = BLOW_UP
                message = "non-finite right-hand side"
                break
            continue

        err_vec = h * (_ERR @ K)
        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))

        if err > 1.0:
            h = max(h * max(0.2, 0.9 * err ** -0.2), opts.min_step * 0.5)
            if h < opts.min_step:
                termination = STEP_COLLAPSE
                message = "step size below min_step under error control"
                break
            continue

        t_new = t + h

        if guard is not None and guard(y_new):
            termination = BLOW_UP
            message = "overflow guard tripped"
            # keep the pre-guard state as the endpoint
            break

        if inside is not None and not inside(y_new):
            # bisect the Hermite interpolant for the first crossing
            lo, hi = t, t_new
            while hi - lo > opts.domain_margin:
                mid = 0.5 * (lo + hi)
                ym = _hermite(mid, t, t_new, y, y_new, f, f_new)
                if inside(ym):
                    lo = mid
                else:
                    hi = mid
            t_esc = lo
            y_esc = _hermite(t_esc, t, t_new, y, y_new, f, f_new)
            f_esc = rhs(y_esc)
            record(t_esc, y_esc, f_esc)
            t, y, f = t_esc, y_esc, f_esc
            termination = DOMAIN_ESCAPE
            message = "left the chart domain"
            break

        t, y, f = t_new, y_new, f_new
        record(t, y.copy(), f.copy())

        if err > 1e-30:
            h = min(h * min(5.0, 0.9 * err ** -0.2), h_max)
        else:
            h = min(h * 5.0, h_max)
    else:
        termination = STEP_COLLAPSE
        message = "max_steps exhausted"

    if termination is None:
        termination = REACHED_TARGET
    if termination == REACHED_TARGET and ts[-1] < t_max:
        # loop broke exactly at t >= t_max with state already stored
        pass
    return _OdeResult(np.array(ts), np.array(ys), np.array(fs), termination, ts[-1], message)


@dataclass
class GeodesicPath:
    """Sampled geodesic t -> (x(t), xdot(t)), affine parameter from 0.

    Coordinates are unwrapped on periodic axes so winding is preserved;
    wrap through the owning manifold where membership matters.
    """

    manifold: ManifoldSpec
    initial: TangentVector
    ts: np.ndarray
    states: np.ndarray  # (n, 2m): x then xdot
    derivs: np.ndarray  # (n, 2m): xdot then acceleration
    termination: str
    message: str = ""

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def points(self) -> np.ndarray:
        return self.states[:, : self.manifold.dim]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, self.manifold.dim :]

    def state_at(self, t: float) -> np.ndarray:
        ts = self.ts
        if t <= ts[0]:
            return self.states[0].copy()
        if t >= ts[-1]:
            return self.states[-1].copy()
        i = int(np.searchsorted(ts, t, side="right") - 1)
        return _hermite(
            t, ts[i], ts[i + 1], self.states[i], self.states[i + 1], self.derivs[i], self.derivs[i + 1]
        )

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        y = self.state_at(t)
        m = self.manifold.dim
        return y[:m], y[m:]

    def end_state(self) -> tuple[np.ndarray, np.ndarray]:
        m = self.manifold.dim
        return self.states[-1, :m].copy(), self.states[-1, m:].copy()


def geodesic_rhs(M: ManifoldSpec):
    """Right-hand side of the first-order geodesic system."""
    m = M.dim
    christoffel = M.christoffel

    if M.flat:

        def rhs_flat(y):
            out = np.zeros(2 * m)
            out[:m] = y[m:]
            return out

        return rhs_flat

    def rhs(y):
        x = y[:m]
        xd = y[m:]
        G = christoffel(x)
        out = np.empty(2 * m)
        out[:m] = xd
        out[m:] = -((G @ xd) @ xd)
        return out

    return rhs


def _domain_inside(M: ManifoldSpec, opts: IntegratorOptions):
    if M.domain_predicate is None and M.domain_distance is None:
        return None
    m = M.dim
    margin = opts.domain_margin

    def inside(y):
        return M.in_domain(y[:m], margin=margin)

    return inside


def _domain_step_cap(M: ManifoldSpec, opts: IntegratorOptions):
    if M.domain_distance is None:
        return None
    m = M.dim
    dist = M.domain_distance
    wrap = M.wrap

    def cap(y):
        d = dist(wrap(y[:m]))
        speed = float(np.linalg.norm(y[m : 2 * m])) + 1e-30
        # travel per step at most half the clearance: crossing the thickened
        # excised set then forces the end-of-step distance below the
        # detection margin, so the escape cannot be stepped over
        return max(0.5 * d / speed, 0.5 * opts.domain_margin / speed)

    return cap


def _overflow_guard(M: ManifoldSpec, opts: IntegratorOptions):
    m = M.dim

    def guard(y):
        return bool(
            np.max(np.abs(y[:m])) > opts.guard_position
            or np.max(np.abs(y[m : 2 * m])) > opts.guard_velocity
        )

    return guard


def integrate_geodesic(
    M: ManifoldSpec,
    p: np.ndarray,
    v: np.ndarray,
    t_max: float,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
    store: bool = True,
) -> GeodesicPath:
    """Integrate the geodesic with initial position p and velocity v."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if t_max <= 0.0:
        raise PreconditionError("t_max must be positive")
    if not M.in_domain(p, margin=opts.domain_margin):
        raise PreconditionError(f"initial point {p} outside domain of {M.name}")

    y0 = np.concatenate((p, v))
    res = _integrate_ode(
        geodesic_rhs(M),
        y0,
        t_max,
        opts,
        inside=_domain_inside(M, opts),
        step_cap=_domain_step_cap(M, opts),
        guard=_overflow_guard(M, opts),
        store=store,
    )
    return GeodesicPath(
        manifold=M,
        initial=TangentVector(p, v),
        ts=res.ts,
        states=res.ys,
        derivs=res.fs,
        termination=res.termination,
        message=res.message,
    )


def exp_map(
    M: ManifoldSpec,
    p: np.ndarray,
    v: np.ndarray,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """exp_p(v): endpoint of the unit-parameter geodesic with velocity v.

    Unwrapped chart coordinates are returned. Raises ExpMapError with the
    partial path attached when v falls outside the maximal domain.
    """
    v = np.asarray(v, dtype=float)
    if float(np.max(np.abs(v))) == 0.0:
        p = np.asarray(p, dtype=float)
        if not M.in_domain(p, margin=opts.domain_margin):
            raise PreconditionError(f"initial point {p} outside domain of {M.name}")
        return p.copy()
    path = integrate_geodesic(M, p, v, 1.0, opts, store=False)
    if path.termination != REACHED_TARGET:
        raise ExpMapError(
            f"v outside the maximal exp domain at {M.name} base {np.asarray(p)}: "
            f"{path.termination} at t={path.t_end:.6g}",
            path=path,
        )
    return path.points[-1].copy()


@dataclass(frozen=True)
class MaximalInterval:
    a_est: float
    b_est: float
    a_flag: str  # "escape" | "horizon"
    b_flag: str


def maximal_interval(
    M: ManifoldSpec,
    w: TangentVector,
    t_probe: float,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> MaximalInterval:
    """Estimate the maximal parameter interval of the h-unit ray w.

    Integrates forward and backward up to t_probe. An endpoint is flagged
    "escape" when the trajectory demonstrably left the domain (or blew up)
    there, "horizon" when the probe simply ran out.
    """
    if t_probe <= 0.0:
        raise PreconditionError("t_probe must be positive")
    n = aux_norm_at(M, w.base, w.components)
    if abs(n - 1.0) > 1e-9:
        raise PreconditionError(f"w must be h-unit, got |w|_h = {n!r}")

    fwd = integrate_geodesic(M, w.base, w.components, t_probe, opts, store=False)
    bwd = integrate_geodesic(M, w.base, -w.components, t_probe, opts, store=False)

    def flag(path):
        return "horizon" if path.termination == REACHED_TARGET else "escape"

    return MaximalInterval(
        a_est=-bwd.t_end, b_est=fwd.t_end, a_flag=flag(bwd), b_flag=flag(fwd)
    )

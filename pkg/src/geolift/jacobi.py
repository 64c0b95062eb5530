"""Jacobi fields: the differential of exp_p and conjugate-point scans.

The m columns of d(exp_p)_v are Jacobi fields J_i(1) along the geodesic
t -> exp_p(t v), propagated from J_i(0) = 0, J_i'(0) = e_i by the linearized
geodesic equation

    Jdd^k + 2 G^k_{ij} xd^i Jd^j + dG^k_{ij,l} xd^i xd^j J^l = 0,

co-integrated with the geodesic itself. A vector v is flagged singular when
|det| falls below a scale-aware threshold relative to the largest |det| seen
along the ray; conjugate parameters along a ray are located by bracketing
sign changes (and sub-threshold dips) of det on a sample grid, then refining
on the dense output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import ExpMapError, PreconditionError, UnsupportedOperationError
from .integrate import (
    DEFAULT_OPTIONS,
    REACHED_TARGET,
    GeodesicPath,
    IntegratorOptions,
    _integrate_ode,
    _domain_inside,
    _domain_step_cap,
    _overflow_guard,
)
from .manifolds import (
    FUTURE,
    ManifoldSpec,
    TangentVector,
    aux_norm_at,
    causal_character,
    unit_ray,
)

__all__ = [
    "DexpMatrix",
    "ConjugateReport",
    "CausalConjugateReport",
    "dexp",
    "exp_and_dexp",
    "conjugate_scan",
    "causal_conjugate_certificate",
    "SINGULAR_REL_THRESHOLD",
]

SINGULAR_REL_THRESHOLD = 1e-7
_FD_STEP = 1e-6


@dataclass(frozen=True)
class DexpMatrix:
    at: TangentVector
    matrix: np.ndarray
    det: float

    def is_singular(self, running_max: float = 1.0) -> bool:
        return abs(self.det) < SINGULAR_REL_THRESHOLD * max(1.0, running_max)


def _fd_dchristoffel(M: ManifoldSpec):
    chris = M.christoffel
    m = M.dim

    def dgamma(x):
        dG = np.empty((m, m, m, m))
        for l in range(m):
            e = np.zeros(m)
            e[l] = _FD_STEP
            dG[:, :, :, l] = (chris(x + e) - chris(x - e)) / (2.0 * _FD_STEP)
        return dG

    return dgamma


def jacobi_rhs(M: ManifoldSpec):
    """RHS of geodesic + m Jacobi fields, state (x, xd, J flat, Jd flat)."""
    m = M.dim
    chris = M.christoffel
    dchris = M.dchristoffel if M.dchristoffel is not None else _fd_dchristoffel(M)
    m2 = m * m
    ntot = 2 * m + 2 * m2

    if M.flat:

        def rhs_flat(y):
            out = np.zeros(ntot)
            out[:m] = y[m : 2 * m]
            out[2 * m : 2 * m + m2] = y[2 * m + m2 :]
            return out

        return rhs_flat

    def rhs(y):
        x = y[:m]
        xd = y[m : 2 * m]
        J = y[2 * m : 2 * m + m2].reshape(m, m)
        Jd = y[2 * m + m2 :].reshape(m, m)
        G = chris(x)
        dG = dchris(x)
        Gx = G @ xd  # (k, j) = G^k_{ij} xd^i  (symmetry in i, j)
        # dG^k_{ij,l} xd^i xd^j -> (k, l)
        F = np.einsum("kijl,i,j->kl", dG, xd, xd)
        out = np.empty(ntot)
        out[:m] = xd
        out[m : 2 * m] = -(Gx @ xd)
        out[2 * m : 2 * m + m2] = y[2 * m + m2 :]
        out[2 * m + m2 :] = (-2.0 * (Gx @ Jd) - F @ J).ravel()
        return out

    return rhs


def _jacobi_initial_state(M: ManifoldSpec, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    m = M.dim
    return np.concatenate((p, v, np.zeros(m * m), np.eye(m).ravel()))


def _jacobi_inside(M: ManifoldSpec, opts: IntegratorOptions):
    base = _domain_inside(M, opts)
    if base is None:
        return None
    return base  # checks y[:m], extra state ignored


def _integrate_jacobi(M, p, v, t_max, opts, store):
    y0 = _jacobi_initial_state(M, np.asarray(p, float), np.asarray(v, float))
    return _integrate_ode(
        jacobi_rhs(M),
        y0,
        t_max,
        opts,
        inside=_jacobi_inside(M, opts),
        step_cap=_domain_step_cap(M, opts),
        guard=_overflow_guard(M, opts),
        store=store,
    )


def exp_and_dexp(
    M: ManifoldSpec,
    p: np.ndarray,
    v: np.ndarray,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
):
    """One co-integration returning (exp_p(v), d(exp_p)_v).

    This is the workhorse of the lifting corrector: the endpoint supplies the
    residual and the Jacobi matrix the Newton Jacobian, at the cost of a
    single integration. Raises ExpMapError when v is outside the domain.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    m = M.dim
    if not M.in_domain(p, margin=opts.domain_margin):
        raise PreconditionError(f"initial point {p} outside domain of {M.name}")
    if float(np.max(np.abs(v))) == 0.0:
        return p.copy(), DexpMatrix(TangentVector(p, v), np.eye(m), 1.0)
    res = _integrate_jacobi(M, p, v, 1.0, opts, store=False)
    if res.termination != REACHED_TARGET:
        raise ExpMapError(
            f"v outside the maximal exp domain at {M.name}: "
            f"{res.termination} at t={res.t_end:.6g}",
            path=None,
        )
    y = res.ys[-1]
    x = y[:m].copy()
    J = y[2 * m : 2 * m + m * m].reshape(m, m).copy()
    return x, DexpMatrix(TangentVector(p, v), J, float(np.linalg.det(J)))


def dexp(
    M: ManifoldSpec,
    p: np.ndarray,
    v: np.ndarray,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
) -> DexpMatrix:
    """d(exp_p)_v as an m x m matrix in chart coordinates."""
    _, D = exp_and_dexp(M, p, v, opts)
    return D


@dataclass
class ConjugateReport:
    ray: TangentVector
    conjugate_times: list[float]
    scan_horizon: float
    det_samples: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def to_jsonable(self) -> dict:
        return {
            "ray": {"base": list(self.ray.base), "components": list(self.ray.components)},
            "conjugate_times": list(self.conjugate_times),
            "scan_horizon": self.scan_horizon,
        }


class _DenseDet:
    """det(d(exp_p)_{t w}) evaluated on the dense output of one coupled
    integration.

    d(exp_p)_{tw} columns are J_i(t)/t for the fields with Jd_i(0) = e_i
    (homogeneity of the Jacobi flow in the ray parameter); zeros of
    det J(t) and of det d(exp)_{tw} agree for t > 0, and |det J(t)/t^m| is
    the quantity thresholded.
    """

    def __init__(self, M, res):
        from .integrate import _hermite

        self.m = M.dim
        self.res = res
        self._hermite = _hermite

    def state(self, t):
        res = self.res
        ts = res.ts
        if t <= ts[0]:
            return res.ys[0]
        if t >= ts[-1]:
            return res.ys[-1]
        i = int(np.searchsorted(ts, t, side="right") - 1)
        return self._hermite(t, ts[i], ts[i + 1], res.ys[i], res.ys[i + 1], res.fs[i], res.fs[i + 1])

    def det(self, t):
        m = self.m
        if t <= 0.0:
            return 1.0
        y = self.state(t)
        J = y[2 * m : 2 * m + m * m].reshape(m, m)
        return float(np.linalg.det(J / t))


def conjugate_scan(
    M: ManifoldSpec,
    p: np.ndarray,
    w: TangentVector,
    t_max: float,
    n_samples: int = 200,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
    refine_tol: float = 1e-10,
) -> ConjugateReport:
    """Locate conjugate parameters along the h-unit ray w up to t_max.

    det(d(exp_p)_{t w}) is sampled at n_samples points; sign changes and dips
    below the scale-aware singularity threshold are bracketed and refined on
    the dense output. A geodesic escaping the domain truncates the horizon.
    """
    p = np.asarray(p, dtype=float)
    if t_max <= 0.0:
        raise PreconditionError("t_max must be positive")
    n = aux_norm_at(M, p, w.components)
    if abs(n - 1.0) > 1e-9:
        raise PreconditionError(f"w must be h-unit, got |w|_h = {n!r}")

    res = _integrate_jacobi(M, p, w.components, t_max, opts, store=True)
    horizon = float(res.ts[-1])
    dense = _DenseDet(M, res)

    grid = np.linspace(horizon / n_samples, horizon, n_samples)
    dets = np.array([dense.det(t) for t in grid])
    samples = np.column_stack((grid, dets))

    times: list[float] = []
    running_max = 1.0
    for i in range(1, len(grid)):
        running_max = max(running_max, abs(dets[i - 1]))
        thr = SINGULAR_REL_THRESHOLD * running_max
        if dets[i - 1] == 0.0:
            times.append(float(grid[i - 1]))
            continue
        if dets[i] * dets[i - 1] < 0.0:
            t_star = brentq(dense.det, grid[i - 1], grid[i], xtol=refine_tol)
            times.append(float(t_star))
        elif (
            0 < i < len(grid) - 1
            and abs(dets[i]) < thr
            and abs(dets[i]) <= abs(dets[i - 1])
            and abs(dets[i]) <= abs(dets[i + 1])
        ):
            r = minimize_scalar(
                lambda t: abs(dense.det(t)),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": refine_tol},
            )
            if abs(r.fun) < thr:
                times.append(float(r.x))

    # merge refinements that found the same root from adjacent brackets
    merged: list[float] = []
    for t in sorted(times):
        if not merged or t - merged[-1] > 10.0 * refine_tol:
            merged.append(t)

    return ConjugateReport(
        ray=TangentVector(p, w.components),
        conjugate_times=merged,
        scan_horizon=horizon,
        det_samples=samples,
    )


@dataclass
class CausalConjugateReport:
    empty: bool
    witnesses: list[tuple[TangentVector, float]]
    horizon: float
    n_rays: int

    def to_jsonable(self) -> dict:
        return {
            "empty": self.empty,
            "witnesses": [
                {
                    "ray": {"base": list(w.base), "components": list(w.components)},
                    "first_conjugate_time": t,
                }
                for (w, t) in self.witnesses
            ],
            "horizon": self.horizon,
            "n_rays": self.n_rays,
        }


def future_causal_rays(M: ManifoldSpec, p: np.ndarray, n_rays: int) -> list[TangentVector]:
    """h-unit rays densely sampling the closed future causal cone at p.

    For 2-dimensional charts the cone is an angle interval; its null
    boundary directions are located by root finding and always included.
    """
    if M.metric is None or M.time_orientation is None:
        raise UnsupportedOperationError("future causal cone needs a metric and a time orientation")
    p = np.asarray(p, dtype=float)
    g = M.metric(M.wrap(p))

    def q_of(theta):
        d = np.array([math.cos(theta), math.sin(theta)])
        u = unit_ray(M, p, d).components
        return float(u @ g @ u)

    if M.dim != 2:
        raise UnsupportedOperationError("causal cone sampling implemented for dim 2")

    # future timelike axis direction
    t_axis = M.time_orientation(M.wrap(p))
    theta0 = math.atan2(t_axis[1], t_axis[0])
    if q_of(theta0) >= 0.0:
        raise UnsupportedOperationError("time orientation field is not timelike here")

    # null boundary on each side of the axis
    def boundary(side):
        lo, hi = 0.0, math.pi / 2.0
        # expand until sign change of g(u,u)
        while q_of(theta0 + side * hi) < 0.0 and hi < math.pi:
            hi += math.pi / 16.0
        return brentq(lambda a: q_of(theta0 + side * a), lo, hi, xtol=1e-14)

    a_minus = boundary(-1.0)
    a_plus = boundary(+1.0)
    angles = np.linspace(theta0 - a_minus, theta0 + a_plus, max(n_rays, 2))
    rays = []
    for a in angles:
        d = np.array([math.cos(a), math.sin(a)])
        rays.append(unit_ray(M, p, d))
    return rays


def causal_conjugate_certificate(
    M: ManifoldSpec,
    p: np.ndarray,
    t_max: float,
    n_rays: int = 64,
    opts: IntegratorOptions = DEFAULT_OPTIONS,
    n_samples: int = 200,
) -> CausalConjugateReport:
    """Sampled evidence for the absence of conjugate points along future
    causal geodesics from p, up to the horizon t_max.

    This is evidence, not proof: the scan covers finitely many rays and a
    finite parameter horizon.
    """
    rays = future_causal_rays(M, p, n_rays)
    witnesses = []
    horizon = 0.0
    for w in rays:
        rep = conjugate_scan(M, p, w, t_max, n_samples=n_samples, opts=opts)
        horizon = max(horizon, rep.scan_horizon)
        if rep.conjugate_times:
            witnesses.append((w, rep.conjugate_times[0]))
    return CausalConjugateReport(
        empty=not witnesses, witnesses=witnesses, horizon=horizon, n_rays=len(rays)
    )

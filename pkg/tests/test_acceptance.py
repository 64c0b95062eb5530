"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured figure of merit and runtime (run with -s to see them all).

Tolerances and runtime bounds are asserted exactly as stated; nothing is
deferred to later calibration.
"""

import math
import time

import numpy as np
import pytest

from geolift.connect import (
    build_timelike_seed,
    connect,
    connect_causal,
    enumerate_multiplicity,
    straighten_homotopy,
)
from geolift.errors import ExpMapError, PreconditionError
from geolift.integrate import IntegratorOptions, exp_map
from geolift.jacobi import conjugate_scan, dexp
from geolift.lifting import LiftOptions, PathSpec, causal_lift, lift_path
from geolift.manifolds import TIMELIKE, aux_norm_at, catalog_manifold, unit_ray
from geolift.probes import (
    EVIDENCE_DISPRISONING,
    EVIDENCE_PROPER,
    EVIDENCE_PSEUDOCONVEX,
    WITNESS_ESCAPE,
    BallSpec,
    ConeSpec,
    ProbeBudgets,
    properness_consistency_check,
    pseudoconvexity_scan,
)

import _oracles as oracle
from conftest import BASE_POINTS, SAFE_RADIUS

NORTH = np.array([0.0, 2.0])


def report(n, name, detail, elapsed, budget):
    print(f"\n[criterion {n}] {name}: PASS ({detail}, {elapsed:.1f}s < {budget:.0f}s)")


def test_criterion_01_sphere_conjugate_points():
    t0 = time.perf_counter()
    M = catalog_manifold("sphere2")
    opts = IntegratorOptions(rel_tol=1e-9, abs_tol=1e-11)
    worst = 0.0
    for j in range(32):
        ang = (j + 0.5) * 2.0 * math.pi / 32.0
        w = unit_ray(M, NORTH, np.array([math.cos(ang), math.sin(ang)]))
        rep = conjugate_scan(M, NORTH, w, 7.0, n_samples=160, opts=opts)
        assert len(rep.conjugate_times) == 2, f"ray {j}: {rep.conjugate_times}"
        dev = max(
            abs(rep.conjugate_times[0] - oracle.SPHERE_CONJUGATE_TIMES[0]),
            abs(rep.conjugate_times[1] - oracle.SPHERE_CONJUGATE_TIMES[1]),
        )
        worst = max(worst, dev)
        assert dev < 1e-6, f"ray {j}: deviation {dev:.2e}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report(1, "sphere conjugate points at {pi, 2pi} on 32 rays", f"max dev {worst:.1e}", elapsed, 10)


def test_criterion_02_sphere_multiplicity():
    t0 = time.perf_counter()
    M = catalog_manifold("sphere2")
    w = unit_ray(M, NORTH, np.array([1.0, 0.0])).components
    q = exp_map(M, NORTH, 1.0 * w)  # great-circle distance exactly 1.0
    res = connect(
        M, NORTH, q, strategy="multistart",
        budget=13.0, grid_step=math.pi, grid_offset=math.pi / 2.0, directions=(1.0,),
    )
    norms = sorted(aux_norm_at(M, NORTH, v) for v in res.velocities)
    expected = [1.0, 2.0 * math.pi - 1.0, 2.0 * math.pi + 1.0, 4.0 * math.pi - 1.0]
    assert len(norms) == len(expected), f"found |v| = {norms}"
    worst = max(abs(a - b) for a, b in zip(norms, expected))
    assert worst < 1e-5
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    report(2, "sphere multiplicity |v| in {1, 2pi-1, 2pi+1, 4pi-1}", f"max dev {worst:.1e}", elapsed, 30)


def test_criterion_03_cylinder_covering_multiplicity():
    t0 = time.perf_counter()
    M = catalog_manifold("cylinder_flat")
    p = np.array([0.0, 0.0])
    q = np.array([1.0, 1.0])
    res = enumerate_multiplicity(M, p, q, class_budget=5)
    assert len(res.solutions) == 11
    want = oracle.cylinder_velocities(p, q, range(-5, 6))
    by_label = {s.class_label: s.v.components for s in res.solutions}
    worst = max(float(np.linalg.norm(by_label[k] - v)) for k, v in want.items())
    assert worst < 1e-8

    loops = enumerate_multiplicity(M, p, p, class_budget=5)
    assert len(loops.solutions) == 10
    want_loops = oracle.cylinder_velocities(p, p, [k for k in range(-5, 6) if k != 0])
    by_label = {s.class_label: s.v.components for s in loops.solutions}
    worst = max(worst, max(float(np.linalg.norm(by_label[k] - v)) for k, v in want_loops.items()))
    assert worst < 1e-8
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report(3, "cylinder multiplicity 11 segments / 10 loops", f"max dev {worst:.1e}", elapsed, 10)


def test_criterion_04_removed_point_obstruction():
    t0 = time.perf_counter()
    M = catalog_manifold("minkowski2_minus_point")
    res = connect_causal(M, [0.0, 0.0], [2.0, 0.0])
    assert res.solutions == []
    assert len(res.diagnostics) == 1
    d = res.diagnostics[0]
    assert d["failure"] == "domain_escape"
    assert d["reach"] >= 0.99
    dev = float(np.linalg.norm(np.array(d["terminal_v"]) - np.array([2.0, 0.0])))
    assert dev < 1e-3
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(4, "removed-point timelike obstruction", f"reach {d['reach']:.6f}, |v-(2,0)| {dev:.1e}", elapsed, 5)


def test_criterion_05_strip_properness_consistency():
    t0 = time.perf_counter()
    M = catalog_manifold("minkowski2_strip")
    rep = properness_consistency_check(
        M,
        ConeSpec("causal_at", np.array([0.0, 0.5])),
        BallSpec(np.array([0.0, 0.5]), 0.4),
        ProbeBudgets(n_rays=16, n_scale=128, scale_max=4.0, doublings=2),
    )
    assert rep.verdicts == (EVIDENCE_PROPER, EVIDENCE_PSEUDOCONVEX, EVIDENCE_DISPRISONING)
    assert rep.consistent is True
    # verdict stability is part of the probes: bounds across the two budget
    # doublings moved by less than the 5 percent stability margin
    h = rep.proper.history
    assert abs(h[-1] - h[-2]) <= 0.05 * max(abs(h[-2]), 1e-12)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    report(5, "strip proper+pseudoconvex+disprisoning consistent", f"preimage bound {h[-1]:.3f}", elapsed, 60)


def test_criterion_06_quadrant_ccp_vs_pseudoconvexity():
    t0 = time.perf_counter()
    M = catalog_manifold("minkowski2_minus_quadrant")
    p = np.array([1.0, -1.0])
    rng = np.random.default_rng(606)
    completed = 0
    for _ in range(20):
        dt1, dt2 = rng.uniform(0.4, 1.2, size=2)
        dx1 = rng.uniform(-0.8, 0.8) * dt1
        dx2 = rng.uniform(-0.8, 0.8) * dt2
        mid = p + np.array([dt1, dx1])
        end = mid + np.array([dt2, dx2])
        path_pts = [p, mid, end]
        from geolift.lifting import polyline_path

        path = polyline_path(path_pts, causal_tag=TIMELIKE)
        res = causal_lift(M, p, path)
        assert res.complete, f"lift failed at {path_pts}"
        completed += 1
    assert completed == 20

    rep = pseudoconvexity_scan(
        M,
        ConeSpec("causal_at", np.array([-0.6, -0.5])),
        BallSpec(np.array([0.0, 0.0]), 0.8),
        n_segments=24,
    )
    assert rep.verdict == WITNESS_ESCAPE
    clear = min(w["clearance"] for w in rep.witness)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    report(
        6, "quadrant: 20 causal lifts succeed, pseudoconvexity witness-escape",
        f"min boundary clearance {clear:.1e}", elapsed, 60,
    )


def test_criterion_07_lorentzian_hadamard_cartan_sampling():
    t0 = time.perf_counter()
    cases = {
        "minkowski2": (np.array([0.0, 0.0]), None),
        "minkowski2_strip": (np.array([0.0, 0.5]), (0.15, 0.85)),
    }
    rng = np.random.default_rng(707)
    worst = 0.0
    for name, (p, x_range) in cases.items():
        M = catalog_manifold(name)
        for _ in range(100):
            dt = rng.uniform(0.3, 2.2)
            if x_range is None:
                dx = rng.uniform(-0.85, 0.85) * dt
            else:
                qx = rng.uniform(*x_range)
                dx = qx - p[1]
                if abs(dx) >= 0.85 * dt:
                    dt = abs(dx) / 0.85 + rng.uniform(0.05, 0.3)
            q = p + np.array([dt, dx])
            res = connect_causal(M, p, q, seed_mode="straight")
            assert len(res.solutions) == 1, (name, q)
            sol = res.solutions[0]
            assert sol.character.tag == TIMELIKE
            res_b = connect_causal(M, p, q, seed_mode="bend")
            assert len(res_b.solutions) == 1
            dev = float(np.linalg.norm(sol.v.components - res_b.solutions[0].v.components))
            worst = max(worst, dev)
            assert dev < 1e-6, (name, q, dev)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    report(7, "Hadamard-Cartan sampling: unique timelike geodesics, seed-independent", f"max dev {worst:.1e}", elapsed, 120)


def test_criterion_08_homotopy_straightening():
    t0 = time.perf_counter()
    M = catalog_manifold("minkowski2")
    path = PathSpec(
        eval=lambda t: np.array([2.0 * t, 0.3 * math.sin(math.pi * t)]),
        eval_dot=lambda t: np.array([2.0, 0.3 * math.pi * math.cos(math.pi * t)]),
        causal_tag=TIMELIKE,
    )
    lift = causal_lift(M, np.zeros(2), path)
    assert lift.complete
    H = straighten_homotopy(M, np.zeros(2), lift, n_s=50, n_t=50)
    assert H.all_slices_timelike
    worst_speed = float(H.max_speed2.max())
    assert worst_speed < -1e-6
    assert H.endpoint_spread < 1e-8
    assert H.base_spread < 1e-8
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report(8, "50x50 homotopy straightening, all slices timelike", f"max g(xdot,xdot) {worst_speed:.3f}", elapsed, 10)


def test_criterion_09_jacobi_correctness():
    t0 = time.perf_counter()
    dexp_opts = IntegratorOptions(rel_tol=1e-10, abs_tol=1e-12)
    fd_opts = IntegratorOptions(rel_tol=1e-11, abs_tol=1e-13)
    eps = 1e-5
    rng = np.random.default_rng(909)
    worst_rel = 0.0
    for name in BASE_POINTS:
        M = catalog_manifold(name)
        p = BASE_POINTS[name]
        D0 = dexp(M, p, np.zeros(2), dexp_opts)
        assert np.max(np.abs(D0.matrix - np.eye(2))) < 1e-9, name
        done = 0
        while done < 50:
            v = rng.uniform(-1.0, 1.0, size=2)
            v *= rng.uniform(0.2, 1.0) * SAFE_RADIUS[name] / np.linalg.norm(v)
            w = rng.normal(size=2)
            w /= np.linalg.norm(w)
            try:
                D = dexp(M, p, v, dexp_opts)
                xp = exp_map(M, p, v + eps * w, fd_opts)
                xm = exp_map(M, p, v - eps * w, fd_opts)
            except (ExpMapError, PreconditionError):
                continue
            fd = (xp - xm) / (2.0 * eps)
            rel = float(np.linalg.norm(D.matrix @ w - fd) / (1.0 + np.linalg.norm(D.matrix)))
            worst_rel = max(worst_rel, rel)
            assert rel <= 1e-4, (name, rel)
            done += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    report(9, "dexp finite-difference consistency, 50 triples x 8 entries", f"max rel dev {worst_rel:.1e}", elapsed, 60)


def test_criterion_10_lift_correctness_and_uniqueness():
    t0 = time.perf_counter()
    verify_opts = IntegratorOptions(rel_tol=1e-10, abs_tol=1e-12)
    rng = np.random.default_rng(1010)
    grid = np.linspace(0.0, 1.0, 21)
    breaks = tuple(float(t) for t in grid[1:-1])
    worst_residual = 0.0
    worst_agree = 0.0
    for name in BASE_POINTS:
        M = catalog_manifold(name)
        p = BASE_POINTS[name]
        done = 0
        while done < 20:
            d = rng.uniform(-1.0, 1.0, size=2)
            d *= rng.uniform(0.5, 1.0) * SAFE_RADIUS[name] / np.linalg.norm(d)
            n = np.array([-d[1], d[0]])
            amp = rng.uniform(0.02, 0.1) * SAFE_RADIUS[name]
            path = PathSpec(
                eval=lambda t, d=d, n=n, amp=amp: p + t * d + amp * math.sin(math.pi * t) * n,
                eval_dot=lambda t, d=d, n=n, amp=amp: d + amp * math.pi * math.cos(math.pi * t) * n,
                breaks=breaks,
            )
            if not all(M.in_domain(path.eval(float(t))) for t in grid):
                continue
            res = lift_path(M, p, path, np.zeros(2))
            if not res.complete:
                continue
            worst_here = max(
                float(np.linalg.norm(exp_map(M, p, v, verify_opts) - path.eval(float(t))))
                for t, v in zip(res.ts, res.vs)
            )
            worst_residual = max(worst_residual, worst_here)
            assert worst_here <= 1e-7, (name, worst_here)

            halved = lift_path(
                M, p, path, np.zeros(2), LiftOptions(dt_init=0.01, dt_max=0.025)
            )
            assert halved.complete
            for t in grid:
                i = int(np.argmin(np.abs(res.ts - t)))
                j = int(np.argmin(np.abs(halved.ts - t)))
                agree = float(np.linalg.norm(res.vs[i] - halved.vs[j]))
                worst_agree = max(worst_agree, agree)
                assert agree <= 1e-6, (name, t, agree)
            done += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    report(
        10, "lift correctness/uniqueness, 20 lifts x 8 entries",
        f"max residual {worst_residual:.1e}, max half-step dev {worst_agree:.1e}", elapsed, 120,
    )

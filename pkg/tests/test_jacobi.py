import math

import numpy as np
import pytest

from geolift.errors import ExpMapError, PreconditionError
from geolift.integrate import IntegratorOptions, exp_map
from geolift.jacobi import (
    causal_conjugate_certificate,
    conjugate_scan,
    dexp,
    exp_and_dexp,
)
from geolift.manifolds import TangentVector, aux_norm_at, catalog_manifold, unit_ray

import _oracles as oracle
from conftest import BASE_POINTS, SAFE_RADIUS


def test_dexp_at_zero_is_identity(manifolds, opts):
    for name, M in manifolds.items():
        D = dexp(M, BASE_POINTS[name], np.zeros(2), opts)
        assert np.max(np.abs(D.matrix - np.eye(2))) < 1e-9, name
        assert D.det == pytest.approx(1.0, abs=1e-9)


def test_dexp_euclid_identity_everywhere(manifolds, opts):
    D = dexp(manifolds["euclidean(2)"], [0.0, 0.0], [2.0, -1.0], opts)
    assert np.max(np.abs(D.matrix - np.eye(2))) < 1e-10


def test_dexp_propagates_domain_escape(manifolds, opts):
    with pytest.raises(ExpMapError):
        dexp(manifolds["minkowski2_strip"], [0.0, 0.5], [0.0, 1.0], opts)


def test_sphere_det_oracle(manifolds, opts):
    # orthonormal-frame determinant equals sin(t)/t along unit rays; the
    # chart-frame value differs by the conformal frame factor
    M = manifolds["sphere2"]
    p = BASE_POINTS["sphere2"]
    w = unit_ray(M, p, np.array([1.0, 0.4])).components

    def lam(x):
        return 4.0 / (4.0 + float(x @ x))

    for t in np.linspace(0.1, 3.0, 12):
        x, D = exp_and_dexp(M, p, t * w, opts)
        det_orth = D.det * (lam(x) / lam(p)) ** 2
        assert abs(det_orth - oracle.sphere_det_dexp_orthonormal(t)) < 1e-6


def test_dexp_finite_difference_consistency(manifolds, fast_opts):
    # spot version of the acceptance criterion, a few triples per entry
    rng = np.random.default_rng(12)
    eps = 1e-5
    for name, M in manifolds.items():
        p = BASE_POINTS[name]
        done = 0
        while done < 5:
            v = rng.uniform(-1.0, 1.0, size=2)
            v *= rng.uniform(0.2, 1.0) * SAFE_RADIUS[name] / np.linalg.norm(v)
            w = rng.normal(size=2)
            w /= np.linalg.norm(w)
            try:
                D = dexp(M, p, v, fast_opts)
                xp = exp_map(M, p, v + eps * w, fast_opts)
                xm = exp_map(M, p, v - eps * w, fast_opts)
            except (ExpMapError, PreconditionError):
                continue
            fd = (xp - xm) / (2.0 * eps)
            err = np.linalg.norm(D.matrix @ w - fd)
            assert err <= 1e-4 * (1.0 + np.linalg.norm(D.matrix)), name
            done += 1


def test_conjugate_scan_flat_empty(manifolds, fast_opts):
    M = manifolds["euclidean(2)"]
    w = unit_ray(M, [0.0, 0.0], np.array([0.6, 0.8]))
    rep = conjugate_scan(M, np.zeros(2), w, 100.0, n_samples=100, opts=fast_opts)
    assert rep.conjugate_times == []
    assert rep.scan_horizon == pytest.approx(100.0)


def test_conjugate_scan_sphere(manifolds, opts):
    M = manifolds["sphere2"]
    p = BASE_POINTS["sphere2"]
    w = unit_ray(M, p, np.array([0.9, -0.2]))
    rep = conjugate_scan(M, p, w, 7.0, n_samples=200, opts=opts)
    assert len(rep.conjugate_times) == 2
    assert rep.conjugate_times[0] == pytest.approx(math.pi, abs=1e-6)
    assert rep.conjugate_times[1] == pytest.approx(2.0 * math.pi, abs=1e-6)


def test_conjugate_scan_requires_unit_ray(manifolds, opts):
    M = manifolds["sphere2"]
    with pytest.raises(PreconditionError):
        conjugate_scan(M, BASE_POINTS["sphere2"], TangentVector(BASE_POINTS["sphere2"], [1.0, 0.0]), 5.0)


def test_conjugate_scan_sphere_ray_symmetry(manifolds):
    # homogeneity of the round metric: conjugate times are ray independent
    M = manifolds["sphere2"]
    p = BASE_POINTS["sphere2"]
    tight = IntegratorOptions(rel_tol=1e-12, abs_tol=1e-13)
    times = []
    for ang in (0.4, 1.9, 3.6, 5.3):
        w = unit_ray(M, p, np.array([math.cos(ang), math.sin(ang)]))
        rep = conjugate_scan(M, p, w, 4.0, n_samples=160, opts=tight, refine_tol=1e-11)
        assert len(rep.conjugate_times) == 1
        times.append(rep.conjugate_times[0])
    assert max(times) - min(times) < 1e-8


def test_conjugate_scan_truncates_at_escape(manifolds, fast_opts):
    M = manifolds["minkowski2_strip"]
    w = unit_ray(M, [0.0, 0.5], np.array([1.0, 0.5]))
    rep = conjugate_scan(M, np.array([0.0, 0.5]), w, 10.0, opts=fast_opts)
    assert rep.conjugate_times == []
    assert rep.scan_horizon < 1.2  # escapes the strip well before t_max


def test_minkowski_causal_rays_no_conjugate(manifolds, fast_opts):
    M = manifolds["minkowski2"]
    rep = causal_conjugate_certificate(M, np.zeros(2), 6.0, n_rays=12, opts=fast_opts, n_samples=80)
    assert rep.empty
    assert rep.n_rays == 12


def test_strip_certificate_empty(manifolds, fast_opts):
    M = manifolds["minkowski2_strip"]
    rep = causal_conjugate_certificate(
        M, np.array([0.0, 0.5]), 6.0, n_rays=8, opts=fast_opts, n_samples=80
    )
    assert rep.empty


def test_desitter_certificate_empty_but_spacelike_conjugate(manifolds, fast_opts):
    # causal rays have no conjugate points (transverse fields grow like
    # sinh); the closed spacelike waist refocuses at parameter pi
    M = manifolds["desitter2"]
    rep = causal_conjugate_certificate(
        M, np.zeros(2), 4.0, n_rays=16, opts=fast_opts, n_samples=120
    )
    assert rep.empty

    w = unit_ray(M, [0.0, 0.0], np.array([0.0, 1.0]))
    scan = conjugate_scan(M, np.zeros(2), w, 4.0, n_samples=160, opts=fast_opts)
    assert len(scan.conjugate_times) == 1
    assert scan.conjugate_times[0] == pytest.approx(oracle.DESITTER_SPACELIKE_CONJUGATE, abs=1e-6)


def test_exp_and_dexp_consistent_with_exp_map(manifolds, opts):
    M = manifolds["desitter2"]
    v = np.array([0.8, 0.3])
    x1, D = exp_and_dexp(M, np.zeros(2), v, opts)
    x2 = exp_map(M, np.zeros(2), v, opts)
    assert np.linalg.norm(x1 - x2) < 1e-9

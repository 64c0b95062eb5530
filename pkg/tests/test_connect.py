import math

import numpy as np
import pytest

from geolift.connect import (
    build_timelike_seed,
    connect,
    connect_causal,
    enumerate_multiplicity,
    straighten_homotopy,
)
from geolift.errors import (
    NoTimelikeSeedError,
    PreconditionError,
    UnsupportedOperationError,
)
from geolift.integrate import exp_map
from geolift.lifting import PathSpec, causal_lift
from geolift.manifolds import TIMELIKE, aux_norm_at, unit_ray

import _oracles as oracle
from conftest import BASE_POINTS


def test_euclid_single_solution(manifolds):
    M = manifolds["euclidean(2)"]
    res = connect(M, [0.0, 0.0], [3.0, 4.0])
    assert len(res.solutions) == 1
    assert np.allclose(res.solutions[0].v.components, [3.0, 4.0], atol=1e-7)


def test_flat_uniqueness_any_strategy(manifolds):
    # simply connected and conjugate-free: multistart finds the same
    # solution from every start and dedup collapses it to one
    for name in ("euclidean(2)", "minkowski2"):
        M = manifolds[name]
        res = connect(M, [0.0, 0.0], [1.0, 0.4], strategy="multistart", budget=6.0, grid_step=1.5)
        assert len(res.solutions) == 1, name
        assert np.allclose(res.solutions[0].v.components, [1.0, 0.4], atol=1e-6)
        res_w = connect(M, [0.0, 0.0], [1.0, 0.4], strategy="waypoints", waypoints=[[0.3, 0.5]])
        assert len(res_w.solutions) == 1
        assert np.allclose(res_w.solutions[0].v.components, [1.0, 0.4], atol=1e-6)


def test_connect_precondition(manifolds):
    with pytest.raises(PreconditionError):
        connect(manifolds["minkowski2_strip"], [0.0, 0.5], [0.0, 1.5])


def test_sphere_multiplicity_norms(manifolds):
    M = manifolds["sphere2"]
    N = BASE_POINTS["sphere2"]
    w = unit_ray(M, N, np.array([1.0, 0.0])).components
    q = exp_map(M, N, 1.0 * w)
    res = connect(
        M, N, q, strategy="multistart",
        budget=13.0, grid_step=math.pi, grid_offset=math.pi / 2.0, directions=(1.0,),
    )
    norms = sorted(aux_norm_at(M, N, v) for v in res.velocities)
    expected = [1.0, 2.0 * math.pi - 1.0, 2.0 * math.pi + 1.0, 4.0 * math.pi - 1.0]
    assert len(norms) == 4
    for got, want in zip(norms, expected):
        assert got == pytest.approx(want, abs=1e-5)


def test_cylinder_multiplicity_counts_and_values(manifolds):
    M = manifolds["cylinder_flat"]
    p = np.array([0.0, 0.0])
    q = np.array([1.0, 1.0])
    res = enumerate_multiplicity(M, p, q, class_budget=5)
    assert len(res.solutions) == 11
    want = oracle.cylinder_velocities(p, q, range(-5, 6))
    by_label = {s.class_label: s.v.components for s in res.solutions}
    for k, v in want.items():
        assert np.linalg.norm(by_label[k] - v) < 1e-8

    loops = enumerate_multiplicity(M, p, p, class_budget=5)
    assert len(loops.solutions) == 10
    assert all(s.class_label != 0 for s in loops.solutions)


def test_euclid_multiplicity_unsupported(manifolds):
    with pytest.raises(UnsupportedOperationError):
        enumerate_multiplicity(manifolds["euclidean(2)"], [0.0, 0.0], [1.0, 0.0], 3)


def test_euclid_multiplicity_with_period_vector(manifolds):
    # a declared deck period turns euclid into a synthetic cylinder
    res = enumerate_multiplicity(
        manifolds["euclidean(2)"], [0.0, 0.0], [1.0, 0.0], 2,
        period_vector=np.array([0.0, 5.0]),
    )
    assert len(res.solutions) == 5


def test_sphere_multiplicity_by_sheets(manifolds):
    M = manifolds["sphere2"]
    N = BASE_POINTS["sphere2"]
    q = exp_map(M, N, unit_ray(M, N, np.array([1.0, 0.0])).components)
    res = enumerate_multiplicity(M, N, q, class_budget=2)
    labels = sorted(s.class_label for s in res.solutions)
    assert labels == [0, 1, 2]


def test_connect_causal_minkowski(manifolds):
    M = manifolds["minkowski2"]
    res = connect_causal(M, [0.0, 0.0], [2.0, 1.0])
    assert len(res.solutions) == 1
    sol = res.solutions[0]
    assert np.allclose(sol.v.components, [2.0, 1.0], atol=1e-7)
    assert sol.character.tag == TIMELIKE
    assert sol.character.orientation == "future"


def test_connect_causal_strip(manifolds):
    M = manifolds["minkowski2_strip"]
    res = connect_causal(M, [0.0, 0.5], [3.0, 0.6])
    assert len(res.solutions) == 1
    assert np.allclose(res.solutions[0].v.components, [3.0, 0.1], atol=1e-7)


def test_connect_causal_removed_point_obstruction(manifolds):
    M = manifolds["minkowski2_minus_point"]
    res = connect_causal(M, [0.0, 0.0], [2.0, 0.0])
    assert res.solutions == []
    assert len(res.diagnostics) == 1
    d = res.diagnostics[0]
    assert d["failure"] == "domain_escape"
    assert d["reach"] >= 0.99
    assert np.linalg.norm(np.array(d["terminal_v"]) - [2.0, 0.0]) < 1e-3


def test_connect_causal_rejects_spacelike_target(manifolds):
    M = manifolds["minkowski2"]
    with pytest.raises(NoTimelikeSeedError):
        connect_causal(M, [0.0, 0.0], [0.1, 2.0])


def test_bent_seed_agrees_with_straight(manifolds):
    M = manifolds["minkowski2_strip"]
    p = np.array([0.0, 0.5])
    q = np.array([2.0, 0.4])
    straight = connect_causal(M, p, q, seed_mode="straight")
    bent = connect_causal(M, p, q, seed_mode="bend")
    assert straight.solutions and bent.solutions
    dv = straight.solutions[0].v.components - bent.solutions[0].v.components
    assert np.linalg.norm(dv) < 1e-6


def test_build_timelike_seed_validates(manifolds):
    M = manifolds["minkowski2"]
    seed = build_timelike_seed(M, np.zeros(2), np.array([2.0, 0.5]))
    assert seed.causal_tag == TIMELIKE
    bent = build_timelike_seed(M, np.zeros(2), np.array([2.0, 0.5]), mode="bend")
    assert bent.breaks  # two legs through a waypoint


def _timelike_lift(M, p=np.zeros(2), grid_n=None):
    breaks = () if grid_n is None else tuple(k / (grid_n - 1) for k in range(1, grid_n - 1))
    path = PathSpec(
        eval=lambda t: p + np.array([2.0 * t, 0.3 * math.sin(math.pi * t)]),
        eval_dot=lambda t: np.array([2.0, 0.3 * math.pi * math.cos(math.pi * t)]),
        breaks=breaks,
        causal_tag="timelike",
    )
    return causal_lift(M, p, path)


def test_homotopy_all_slices_timelike(manifolds):
    M = manifolds["minkowski2"]
    lift = _timelike_lift(M)
    H = straighten_homotopy(M, np.zeros(2), lift, n_s=20, n_t=20)
    assert H.all_slices_timelike
    assert H.breaches == []
    assert float(H.max_speed2.max()) < -1e-6
    assert H.endpoint_spread < 1e-8
    assert H.base_spread < 1e-12


def test_homotopy_boundary_slices(manifolds):
    # slice s = 0 is the lifted path, slice s = 1 the straight geodesic;
    # the lift is forced to sample on the homotopy grid for an exact check
    M = manifolds["minkowski2"]
    lift = _timelike_lift(M, grid_n=11)
    H = straighten_homotopy(M, np.zeros(2), lift, n_s=11, n_t=11)
    for j, t in enumerate(H.t_values):
        alpha_t = np.array([2.0 * t, 0.3 * math.sin(math.pi * t)])
        geo_t = t * lift.vs[-1]
        assert np.linalg.norm(H.points[0, j] - alpha_t) < 1e-5
        assert np.linalg.norm(H.points[-1, j] - geo_t) < 1e-7
    # the t = 0 column is constantly the base point
    assert np.max(np.abs(H.points[:, 0, :])) < 1e-12


def test_homotopy_requires_complete_timelike_lift(manifolds):
    M = manifolds["minkowski2"]
    lift = _timelike_lift(M)
    lift.status = "failed"
    with pytest.raises(PreconditionError):
        straighten_homotopy(M, np.zeros(2), lift, 5, 5)

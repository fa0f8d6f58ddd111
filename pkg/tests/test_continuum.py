"""Continuum ODE system: integrators, closed forms, shooting, stability."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from swarmsched import (ShootingError, SingularDynamicsError, TwoDegreeSystem,
                        exact_ldf_relation, exact_ldf_relation_finite,
                        integrate_mixed, integrate_pure_ldf,
                        integrate_two_class, ldf_buffer_requirement,
                        mixed_approx_relation, mixed_approx_relation_simplified,
                        stability_jacobian, EDF, LDF)
from swarmsched.continuum import mixed_rhs, pure_ldf_rhs

GAME_SYS = TwoDegreeSystem.from_population(25, 55, 0.85, 0.25, peer_count=1000)
GAME_SYS_SLOW = TwoDegreeSystem.from_population(25, 55, 0.85, 0.025,
                                                peer_count=1000)


def test_equal_degrees_give_identical_curves():
    sys_ = TwoDegreeSystem.from_population(25, 25, 0.85, 0.05, peer_count=1000)
    traj = integrate_pure_ldf(sys_, 20.0)
    assert np.max(np.abs(traj.y1 - traj.y2)) <= 1e-12


def test_exact_relation_point_values():
    assert exact_ldf_relation(1.0, 0.5) == pytest.approx(1.0)
    assert exact_ldf_relation(0.37, 1.0) == pytest.approx(0.37)
    assert exact_ldf_relation(0.5, 0.5) == pytest.approx(2.0 / 3.0)
    with pytest.raises(ValueError):
        exact_ldf_relation(1.5, 0.5)
    with pytest.raises(ValueError):
        exact_ldf_relation(0.5, 0.0)


def test_pure_ldf_first_integral_in_large_system_limit():
    sys_ = TwoDegreeSystem.from_population(25, 55, 0.85, 0.25,
                                           p1_boundary=1e-9)
    traj = integrate_pure_ldf(sys_, 40.0)
    predicted = np.array([exact_ldf_relation(v, sys_.r) for v in traj.y1])
    assert np.max(np.abs(traj.y2 - predicted)) <= 1e-6


def test_pure_ldf_finite_system_first_integral():
    traj = integrate_pure_ldf(GAME_SYS, 40.0)
    predicted = np.array([exact_ldf_relation_finite(v, 25, 55, 1000)
                          for v in traj.y1])
    assert np.max(np.abs(traj.y2 - predicted)) <= 1e-6
    assert np.all(traj.y2 >= traj.y1)  # stronger peers stay ahead under LDF


def test_trajectories_monotone_and_bounded():
    for traj in (integrate_pure_ldf(GAME_SYS, 40.0),
                 integrate_mixed(GAME_SYS_SLOW, 40.0)):
        for curve in (traj.y1, traj.y2, traj.y):
            assert np.all(np.diff(curve) >= -1e-12)
            assert curve.min() >= 0.0 and curve.max() <= 1.0 + 1e-12


def test_step_halving_changes_endpoint_negligibly():
    coarse = integrate_pure_ldf(GAME_SYS, 40.0, step=0.01)
    fine = integrate_pure_ldf(GAME_SYS, 40.0, step=0.005)
    assert abs(coarse.y1[-1] - fine.y1[-1]) <= 1e-8
    assert abs(coarse.y2[-1] - fine.y2[-1]) <= 1e-8


def weak_ldf_inverse_speed(sys_, y):
    """Exact dx/dy1 for the weak class after eliminating the strong one."""
    g = sys_.q1 * (sys_.r + (1.0 - sys_.r) * y) + sys_.q2
    return ((sys_.r + (1.0 - sys_.r) * y)
            / (sys_.k1 * sys_.contact_scale * g * y * (1.0 - y) ** 2))


@pytest.mark.parametrize("eps1", [0.05, 0.1, 0.2])
def test_buffer_requirement_matches_quadrature(eps1):
    # independent oracle: integrate the inverse speed numerically
    p1 = GAME_SYS.p1_boundary
    expected = 1.0 + quad(lambda y: weak_ldf_inverse_speed(GAME_SYS, y),
                          p1, 1.0 - eps1, limit=200)[0]
    req = ldf_buffer_requirement(GAME_SYS, eps1)
    assert req.n1 == pytest.approx(expected, rel=1e-8)


def test_buffer_requirement_sensitivities_and_domain():
    req = ldf_buffer_requirement(GAME_SYS, 0.1)
    assert req.dn1_deps1 < 0.0   # stricter continuity needs more buffer
    assert req.dn1_dp1 < 0.0     # larger systems need more buffer
    with pytest.raises(ValueError):
        ldf_buffer_requirement(GAME_SYS, 0.9995, p1=0.001)


def test_buffer_requirement_against_ode_crossing():
    traj = integrate_pure_ldf(GAME_SYS, 60.0, step=0.002)
    for eps1 in (0.05, 0.1, 0.2):
        req = ldf_buffer_requirement(GAME_SYS, eps1)
        crossing = traj.x[np.argmax(traj.y1 >= 1.0 - eps1)]
        assert abs(req.n1 - crossing) / crossing <= 0.02


def test_mixed_shooting_self_consistency():
    traj = integrate_mixed(GAME_SYS_SLOW, 40.0, shoot_tol=1e-9)
    eps1 = traj.eps["eps1"]
    assert abs((1.0 - traj.y1[-1]) - eps1) <= 1e-9


def test_mixed_beats_pure_ldf_and_crossover_exists():
    mixed = integrate_mixed(GAME_SYS_SLOW, 40.0)
    ldf = integrate_pure_ldf(GAME_SYS_SLOW, 40.0)
    assert mixed.y[-1] > ldf.y[-1]
    assert np.any(mixed.y1 > mixed.y2)  # weak class overtakes the strong one


def test_mixed_singularity_is_a_hard_error():
    with pytest.raises(SingularDynamicsError) as err:
        integrate_mixed(GAME_SYS, 40.0)
    assert err.value.degree in (25, 55)


def test_two_class_rejects_unknown_strategy():
    with pytest.raises(ValueError):
        integrate_two_class(GAME_SYS_SLOW, ("LDF", "GREEDY"), 10.0)


def test_mixed_approx_simplified_limits():
    for y2 in (0.99, 0.999, 0.9999):
        y1 = mixed_approx_relation_simplified(y2, GAME_SYS_SLOW)
        assert 0.0 <= y1 <= 1.0
    assert mixed_approx_relation_simplified(0.9999, GAME_SYS_SLOW) > 0.999


def test_mixed_approx_is_conservative():
    # the first-order tail expansion must underestimate the weak class: at a
    # matched weak value, the approximate orbit has let the strong class
    # advance at least as far as the exact one
    traj = integrate_mixed(GAME_SYS_SLOW, 40.0)
    eps1 = traj.eps["eps1"]
    p1 = GAME_SYS_SLOW.p1_boundary
    for y1, y2 in zip(traj.y1[::50], traj.y2[::50]):
        if y1 - p1 + eps1 <= 1e-12 or y1 >= 1.0 - 1e-9:
            continue
        approx_y2 = mixed_approx_relation(float(y1), GAME_SYS_SLOW, eps1)
        assert approx_y2 >= y2 - 1e-6


def test_crossover_prediction_from_simplified_form():
    # f1(z) * f2(z) < 1 near z = 1 forces the weak class above the strong one
    sys_ = GAME_SYS_SLOW
    c0 = (math.log(sys_.p1_boundary / (1.0 - sys_.p1_boundary)) / sys_.r
          - 1.0 / (1.0 - sys_.p1_boundary))
    zs = np.linspace(0.9, 1.0 - 1e-9, 2000)
    f1f2 = zs * (1.0 + np.exp(-sys_.r * (1.0 / (1.0 - zs) + c0)))
    assert np.any(f1f2 < 1.0)


def test_pure_ldf_doubly_degenerate_at_full_buffers():
    rep = stability_jacobian(GAME_SYS, "pure_ldf", (1.0, 1.0))
    assert np.max(np.abs(rep.jacobian)) == 0.0
    assert np.max(np.abs(rep.eigenvalues)) == 0.0


def test_mixed_singly_degenerate_at_full_buffers():
    eps1 = 0.07
    rep = stability_jacobian(GAME_SYS, "mixed", (1.0, 1.0), eps1=eps1)
    eig = sorted(rep.eigenvalues.real)
    y0 = GAME_SYS.p1_boundary - eps1
    expected = -GAME_SYS.k1 * GAME_SYS.contact_scale * (1.0 - y0)
    assert abs(eig[0] - expected) <= 1e-9
    assert abs(eig[1]) <= 1e-9
    assert "y0" in rep.notes


def fd_jacobian(fn, point, h=1e-7):
    out = np.empty((2, 2))
    for j in range(2):
        up = list(point)
        dn = list(point)
        up[j] += h
        dn[j] -= h
        out[:, j] = (fn(tuple(up)) - fn(tuple(dn))) / (2.0 * h)
    return out


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(5)
    eps1 = 0.2
    for _ in range(10):
        point = tuple(rng.uniform(0.2, 0.8, size=2))
        ldf = stability_jacobian(GAME_SYS_SLOW, "pure_ldf", point)
        fd = fd_jacobian(lambda p: pure_ldf_rhs(GAME_SYS_SLOW, p), point)
        assert np.max(np.abs(ldf.jacobian - fd)) <= 1e-6
        mixed = stability_jacobian(GAME_SYS_SLOW, "mixed", point, eps1=eps1)
        fd = fd_jacobian(lambda p: mixed_rhs(GAME_SYS_SLOW, p, eps1), point)
        assert np.max(np.abs(mixed.jacobian - fd)) <= 1e-6
    assert stability_jacobian(GAME_SYS_SLOW, "mixed", (0.5, 0.6),
                              eps1=eps1).jacobian.shape == (2, 2)


def test_mixed_jacobian_rejects_singular_points():
    with pytest.raises(SingularDynamicsError):
        stability_jacobian(GAME_SYS, "mixed", (0.3, 0.9), eps1=0.1)
    with pytest.raises(ValueError):
        stability_jacobian(GAME_SYS, "mixed", (1.0, 1.0))
    with pytest.raises(ValueError):
        stability_jacobian(GAME_SYS, "spiral", (0.5, 0.5))


def test_trajectory_csv_columns():
    traj = integrate_pure_ldf(GAME_SYS, 5.0, step=0.5)
    lines = traj.to_csv().strip().split("\n")
    assert lines[0] == "x,y1,y2,y"
    assert len(lines) == 1 + len(traj.x)


def test_system_validation():
    with pytest.raises(ValueError):
        TwoDegreeSystem(55, 25, 0.5, 0.5, 0.5, 0.5, 0.1, 0.001)
    with pytest.raises(ValueError):
        TwoDegreeSystem(25, 55, 0.7, 0.7, 0.5, 0.5, 0.1, 0.001)
    with pytest.raises(ValueError):
        TwoDegreeSystem.from_population(25, 55, 0.85, 0.1)
    sys_ = TwoDegreeSystem.from_population(25, 55, 0.85, 0.1, peer_count=100)
    assert sys_.r == pytest.approx(25 / 55)
    assert sys_.q1 + sys_.q2 == pytest.approx(1.0)

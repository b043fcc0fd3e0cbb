import numpy as np
import pytest

from confocal_instanton.confocal import EllipsoidalPoint, FocalTriple, from_cartesian, jacobian, to_cartesian
from confocal_instanton.errors import DomainError, SingularityError
from confocal_instanton.field import (
    connection,
    connection_cartesian,
    connection_jacobian,
    fd_curl,
    fd_gradient,
    field_checks,
    potential,
    potential_cartesian,
    potential_gradient,
    sample,
    sample_points,
    special_potential,
    staeckel_decomposition,
)

V_WORKED = np.sqrt(20.0) / 13.5


def test_potential_worked_point(f, worked):
    assert potential(worked, f) == pytest.approx(V_WORKED, rel=1e-14)
    assert potential(worked, f) == pytest.approx(0.331269, abs=1e-6)


def test_potential_boundary_point(f):
    assert potential(EllipsoidalPoint(5.0, 4.0, 1.0), f) == pytest.approx(np.sqrt(5) / 2, rel=1e-14)


def test_potential_decays(f):
    assert potential(EllipsoidalPoint(1e8, 2.0, 0.5), f) < 2e-4


def test_potential_singular_on_focal_ellipse(f):
    with pytest.raises(SingularityError):
        potential(EllipsoidalPoint(4.0, 4.0, 0.5), f)


def test_potential_cartesian_worked_point(f, worked_xyz):
    assert potential_cartesian(worked_xyz, f) == pytest.approx(V_WORKED, rel=1e-10)


def test_potential_cartesian_on_axis(f):
    assert potential_cartesian([np.sqrt(5.0), 0.0, 0.0], f) == pytest.approx(np.sqrt(5) / 2, rel=1e-14)


def test_flat_potential_is_one_over_r():
    f = FocalTriple(0.0, 0.0, 0.0)
    c = np.array([0.3, -1.2, 2.0])
    assert potential_cartesian(c, f) == pytest.approx(1.0 / np.linalg.norm(c), rel=1e-15)
    assert special_potential("flat", [0.0, 2.0, 0.0], f) == 0.5


def test_small_spread_approaches_flat():
    c = np.array([1.0, 2.0, -0.5])
    r = np.linalg.norm(c)
    errs = [abs(potential_cartesian(c, FocalTriple(0.0, e, 2 * e)) * r - 1) for e in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


def test_eguchi_hanson_examples():
    f = FocalTriple(0.0, 4.0, 4.0)
    assert potential_cartesian([0.0, 3.0, 0.0], f) == pytest.approx(1 / np.sqrt(13), rel=1e-14)
    assert special_potential("eguchi_hanson", [0.0, 3.0, 0.0], f) == pytest.approx(0.277350, abs=1e-6)
    for x in (2.5, 3.0, 7.0):
        assert potential_cartesian([x, 0.0, 0.0], f) == pytest.approx(x / (x * x - 4), rel=1e-13)


def test_axis_closed_form_for_lower_coincidence():
    f = FocalTriple(0.0, 0.0, 4.0)
    for z in (0.5, 1.0, -3.0):
        assert potential_cartesian([0.0, 0.0, z], f) == pytest.approx(abs(z) / (z * z + 4), rel=1e-12)


def test_special_potential_preconditions(f):
    with pytest.raises(DomainError):
        special_potential("flat", [1.0, 0.0, 0.0], f)
    with pytest.raises(DomainError):
        special_potential("eguchi_hanson", [1.0, 0.0, 0.0], FocalTriple(0, 0, 4))
    with pytest.raises(DomainError):
        special_potential("taub_nut", [1.0, 0.0, 0.0], f)


def test_route_equivalence_random(f, rng):
    for _ in range(200):
        p = EllipsoidalPoint(4 + 10 * rng.uniform(0.01, 1), rng.uniform(1.01, 3.99), rng.uniform(0.01, 0.99))
        V = potential(p, f)
        assert potential_cartesian(to_cartesian(p, f), f) == pytest.approx(V, rel=1e-10)


def test_focal_disk_surface_source(f):
    # Inside the focal ellipse x**2/4 + y**2/3 < 1, V is continuous and ~|z|.
    below = potential_cartesian([0.5, 0.5, -1e-4], f)
    above = potential_cartesian([0.5, 0.5, 1e-4], f)
    assert below == pytest.approx(above, rel=1e-12)
    assert potential_cartesian([0.5, 0.5, 0.0], f) == 0.0
    assert above < 1e-3


def test_potential_gradient_matches_fd(f, rng):
    V = lambda x: potential_cartesian(x, f)  # noqa: E731
    for c in sample_points(f, 20, rng):
        np.testing.assert_allclose(potential_gradient(c, f), fd_gradient(V, c, 1e-4), rtol=1e-6, atol=1e-9)


def test_connection_worked_point(f, worked):
    omega_mu, omega_nu = connection(worked, f)
    assert omega_nu == pytest.approx(-1.069045, abs=1e-6)
    # Sign of the dmu term chosen so that curl omega = grad V.
    assert omega_mu == pytest.approx(-0.103935, abs=1e-6)


def test_connection_rejects_endpoint(f):
    with pytest.raises(DomainError):
        connection(EllipsoidalPoint(5.0, 4.0, 0.5), f)


def test_connection_cartesian_covector(f, worked, worked_xyz):
    w = connection_cartesian(worked_xyz, f)
    J = jacobian(worked, f)
    comps = w @ J
    assert abs(comps[0]) < 1e-10
    np.testing.assert_allclose(comps[1:], connection(worked, f), rtol=1e-10)


def test_connection_is_continuous_across_planes(f):
    for c, axis in (([2.5, 0.7, 0.0], 2), ([0.0, 1.5, 1.0], 0), ([1.5, 0.0, 1.0], 1)):
        c = np.array(c, dtype=float)
        e = np.eye(3)[axis]
        on = connection_cartesian(c, f)
        for s in (1e-2, -1e-2):
            near = connection_cartesian(c + s * e, f)
            assert np.linalg.norm(near - on) < 0.05 * (1 + np.linalg.norm(on))


def test_connection_undefined_on_focal_disk(f):
    with pytest.raises(SingularityError):
        connection_cartesian([0.5, 0.5, 0.0], f)


def test_connection_jacobian_matches_fd(f, rng):
    W = lambda x: connection_cartesian(x, f)  # noqa: E731
    for c in sample_points(f, 10, rng):
        fd = np.stack([fd_gradient(lambda x, i=i: W(x)[i], c, 1e-4) for i in range(3)])
        np.testing.assert_allclose(connection_jacobian(c, f), fd, rtol=1e-5, atol=1e-7)


def test_curl_equals_grad_in_every_octant(f):
    W = lambda x: connection_cartesian(x, f)  # noqa: E731
    base = np.array([1.3, 0.9, 0.6])
    for signs in np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).T.reshape(-1, 3):
        c = base * signs
        curl = fd_curl(W, c, 1e-3)
        grad = potential_gradient(c, f)
        assert np.linalg.norm(curl - grad) / np.linalg.norm(grad) < 1e-6


def test_staeckel_decomposition(f, worked):
    assert abs(staeckel_decomposition(worked, f)) < 1e-12
    assert abs(staeckel_decomposition(EllipsoidalPoint(5.0, 4.0, 1.0), f)) < 1e-12


def test_sample_flags_planes(f):
    s = sample([1.0, 0.0, 0.0], FocalTriple(0, 4, 4))
    assert "chart" in s.flags and np.all(np.isnan(s.omega))
    s = sample([1.2, 0.8, 0.7], f)
    assert s.flags == () and s.V > 0


def test_field_checks_strict_triple(f):
    report = field_checks(f, n_samples=100, seed=3)
    assert report.passed
    assert report.laplacian_max <= 1e-4 and report.curl_max <= 1e-4
    assert report.curl_sign == 1


def test_field_checks_flat():
    report = field_checks(FocalTriple(0, 0, 0), n_samples=50, seed=1)
    assert report.laplacian_max <= 1e-6
    assert report.curl is None


def test_order2_curl_error_is_truncation(f):
    # The order-2 stencil is dominated by an h**2 term near the focal hyperbola.
    W = lambda x: connection_cartesian(x, f)  # noqa: E731
    c = np.array([1.5, 0.35, 0.4])
    grad = potential_gradient(c, f)
    errs = [np.linalg.norm(fd_curl(W, c, h, order=2) - grad) for h in (4e-3, 2e-3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_sample_points_respect_guard(f, rng):
    pts = sample_points(f, 200, rng, guard=0.05)
    assert np.min(np.abs(pts)) >= 0.05 * f.spread

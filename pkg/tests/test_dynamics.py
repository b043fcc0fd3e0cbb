import numpy as np
import pytest

from confocal_instanton.checks import on_shell_state, random_shell_states, shell_value, trajectory_drifts
from confocal_instanton.confocal import EllipsoidalPoint, cubic, from_cartesian, to_cartesian
from confocal_instanton.dynamics import (
    ReducedState,
    Trajectory,
    cotangent_to_ellipsoidal,
    ellipsoidal_to_cotangent,
    flow_rhs,
    hamiltonian,
    integrate,
    momentum_from_separation,
    separation_line,
)
from confocal_instanton.errors import DomainError, SingularityError
from confocal_instanton.field import potential_cartesian, potential_gradient


def worked_momentum(f, worked):
    p_lam = np.sqrt(np.sqrt(20.0) / 80.0)
    return ellipsoidal_to_cotangent(worked, [p_lam, 0.0, 0.0], f)


def test_worked_state_is_on_shell(f, worked, worked_xyz):
    p = worked_momentum(f, worked)
    assert hamiltonian(ReducedState(worked_xyz, p), f) == pytest.approx(0.5, rel=1e-12)


def test_worked_state_separation_constants(f, worked, worked_xyz):
    (a, b), resid = separation_line(worked_xyz, worked_momentum(f, worked), f)
    assert abs(a) < 1e-12 and abs(b) < 1e-12
    assert resid <= 1e-12


def test_zero_momentum_flags_off_shell(f, worked_xyz):
    _, resid = separation_line(worked_xyz, np.zeros(3), f)
    assert resid == pytest.approx(1.0, rel=1e-12)


def test_zero_momentum_is_stationary(f, worked_xyz):
    xdot, pdot = flow_rhs(ReducedState(worked_xyz, np.zeros(3)), f)
    np.testing.assert_array_equal(xdot, 0.0)
    np.testing.assert_array_equal(pdot, 0.0)


def test_force_points_up_the_potential(f, rng):
    for c in rng.uniform(0.3, 2.0, (10, 3)):
        s = ReducedState(c, rng.normal(size=3))
        _, pdot = flow_rhs(s, f)
        assert pdot @ potential_gradient(c, f) > 0


@pytest.mark.parametrize("e", [0.0, 0.3])
def test_flow_rhs_is_hamiltonian(f, e):
    x = np.array([1.4, 0.8, 0.9])
    p = np.array([0.2, -0.3, 0.5])
    xdot, pdot = flow_rhs(ReducedState(x, p, e), f)
    h = 1e-6
    for i in range(3):
        d = np.eye(3)[i] * h
        dH_dx = (hamiltonian(ReducedState(x + d, p, e), f) - hamiltonian(ReducedState(x - d, p, e), f)) / (2 * h)
        dH_dp = (hamiltonian(ReducedState(x, p + d, e), f) - hamiltonian(ReducedState(x, p - d, e), f)) / (2 * h)
        assert pdot[i] == pytest.approx(-dH_dx, abs=1e-7)
        assert xdot[i] == pytest.approx(dH_dp, abs=1e-7)


def test_cotangent_round_trip(f, worked, worked_xyz):
    p = np.array([0.3, -0.2, 0.7])
    pt, *p_ell = cotangent_to_ellipsoidal(worked_xyz, p, f)
    np.testing.assert_allclose(ellipsoidal_to_cotangent(pt, p_ell, f), p, atol=1e-13)


@pytest.mark.parametrize("signs", [(1, 1, 1), (1, -1, 1), (-1, 1, -1)])
def test_constructive_inverse(f, rng, signs):
    for _ in range(20):
        pt = EllipsoidalPoint(4 + rng.uniform(0.5, 6), rng.uniform(1.2, 3.8), rng.uniform(0.1, 0.9),
                              tuple(rng.choice([-1, 1], 3)))
        # Admissible constants: a*mu + b <= 0 <= a*nu + b.
        a = -rng.uniform(0.1, 2.0)
        b = -a * rng.uniform(pt.nu, pt.mu)
        try:
            p = momentum_from_separation(pt, a, b, f, signs)
        except DomainError:
            continue
        x = to_cartesian(pt, f)
        (a2, b2), resid = separation_line(x, p, f)
        assert a2 == pytest.approx(a, abs=1e-10)
        assert b2 == pytest.approx(b, abs=1e-10)
        assert resid <= 1e-10
        assert hamiltonian(ReducedState(x, p), f) == pytest.approx(0.5, rel=1e-10)


def test_inadmissible_constants(f, worked):
    with pytest.raises(DomainError):
        momentum_from_separation(worked, 0.3, -0.8, f)


def test_separation_nodes_coincide(f):
    # mu = nu = lam2 on the focal hyperbola x**2 - z**2/3 = 1, y = 0.
    with pytest.raises(DomainError):
        separation_line([2.0, 0.0, 3.0], [0.1, 0.2, 0.3], f)


def test_separation_finite_on_plane(f):
    x = np.array([1.5, 0.0, 0.9])
    s = on_shell_state(x, [0.2, 1.0, -0.3], f)
    (a, b), resid = separation_line(s.position, s.momentum, f)
    assert np.isfinite(a) and np.isfinite(b)
    assert resid < 1e-10


def test_branch_sign_consistency(f, rng):
    for s in random_shell_states(f, 50, rng):
        (a, b), _ = separation_line(s.position, s.momentum, f)
        pt = from_cartesian(s.position, f)
        tol = 1e-10 * (1 + abs(a) + abs(b))
        assert a * pt.mu + b <= tol
        assert a * pt.nu + b >= -tol
        assert np.sqrt(cubic(pt.lam, f)[0]) + a * pt.lam + b >= -tol


def test_integrate_conserves(f, rng):
    s0 = random_shell_states(f, 1, rng)[0]
    traj = integrate(s0, f, 10.0, tol=1e-10)
    d = trajectory_drifts(traj)
    assert d["energy"] <= 1e-8
    assert d["separation"] <= 1e-6
    assert d["collinearity"] <= 1e-8


def test_integrate_charged_shell(f, rng):
    s0 = random_shell_states(f, 1, rng, e=0.3)[0]
    assert shell_value(s0, f) == pytest.approx(1.0, abs=1e-12)
    traj = integrate(s0, f, 10.0, tol=1e-10)
    assert all(abs(shell_value(traj.state(k), f) - 1) <= 1e-8 for k in range(len(traj.t)))
    assert np.all(np.isnan(traj.a))


def test_time_reversal(f):
    s0 = on_shell_state([1.6, 1.1, 0.9], [0.3, -1.0, 0.2], f)
    fwd = integrate(s0, f, 3.0, tol=1e-11)
    assert fwd.status == "complete"
    back = integrate(fwd.state(-1), f, -3.0, tol=1e-11)
    np.testing.assert_allclose(back.x[-1], s0.position, atol=1e-6)
    np.testing.assert_allclose(back.p[-1], s0.momentum, atol=1e-6)


def test_guard_termination(f):
    # Head straight for the focal disk.
    s0 = on_shell_state([0.8, 0.5, 1.0], [0.0, 0.0, -1.0], f)
    traj = integrate(s0, f, 10.0)
    assert traj.status == "guard"
    assert traj.t[-1] < 10.0


def test_start_in_guard_zone(f):
    with pytest.raises(SingularityError):
        integrate(ReducedState([0.8, 0.5, 0.01], [0.0, 0.0, 1.0]), f, 1.0)


def test_trajectory_schema(f, worked, worked_xyz):
    s0 = ReducedState(worked_xyz, worked_momentum(f, worked))
    traj = integrate(s0, f, 1.0, n_out=5)
    rows = list(traj.rows())
    assert len(rows) == 5 and len(rows[0]) == len(Trajectory.COLUMNS) == 11
    assert rows[0][0] == 0.0
    np.testing.assert_allclose(traj.a, 0.0, atol=1e-9)
    np.testing.assert_allclose(traj.b, 0.0, atol=1e-9)


def test_on_shell_state_rejects_strong_charge(f):
    with pytest.raises(ValueError):
        on_shell_state([1.5, 0.5, 0.5], [1, 0, 0], f, e=10.0)
    assert 100 * potential_cartesian([1.5, 0.5, 0.5], f) > 1

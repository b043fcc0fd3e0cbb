"""Reduced geodesic flow on the quotient R^3 and its separation constants.

Writing the action as ``e*tau + W(x)`` reduces geodesics of the 4-metric to a
charged particle in R^3 with Hamiltonian

    H = (|p - e*omega|**2 / V + e**2 * V) / 2,

unit-speed geodesics sitting on the shell ``H = 1/2``.  For ``e = 0`` the
Hamilton-Jacobi equation separates in ellipsoidal coordinates: with
``K_xi = 4 Q(xi) p_xi**2 - [xi is lam] sqrt(Q(lam))`` the three points
``(xi, K_xi)`` lie on a line ``K = a*xi + b`` whose coefficients are conserved.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp

from .confocal import (
    ENDPOINT_TOL,
    EllipsoidalPoint,
    FocalTriple,
    cubic,
    from_cartesian,
    inverse_metric_factors,
    jacobian,
    outer_root,
    regular_partials,
)
from .errors import DomainError, SingularityError
from .field import connection_cartesian, connection_jacobian, potential_cartesian, potential_gradient

# Sign of Q on the (lam, mu, nu) branches.
BRANCH_SIGNS = np.array([1.0, -1.0, 1.0])


@dataclass(frozen=True)
class ReducedState:
    position: np.ndarray
    momentum: np.ndarray
    e: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "momentum", np.asarray(self.momentum, dtype=float))

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.momentum])


class SeparationLine(tuple):
    """Stackel constants ``(a, b)`` of the line ``K = a*xi + b``."""

    def __new__(cls, a: float, b: float):
        return super().__new__(cls, (float(a), float(b)))

    @property
    def a(self) -> float:
        return self[0]

    @property
    def b(self) -> float:
        return self[1]


def _kinetic_momentum(s: ReducedState, f: FocalTriple) -> np.ndarray:
    if s.e == 0.0:
        return s.momentum
    return s.momentum - s.e * connection_cartesian(s.position, f)


def hamiltonian(s: ReducedState, f: FocalTriple) -> float:
    """``H = (|p - e omega|**2 / V + e**2 V) / 2``; the unit-speed shell is ``H = 1/2``."""
    V = potential_cartesian(s.position, f)
    pi = _kinetic_momentum(s, f)
    return 0.5 * (float(pi @ pi) / V + s.e**2 * V)


def flow_rhs(s: ReducedState, f: FocalTriple) -> tuple[np.ndarray, np.ndarray]:
    """Hamilton's equations ``(dx/dt, dp/dt) = (dH/dp, -dH/dx)``.

    ``grad V`` is analytic everywhere off the focal disk; ``d omega`` is
    analytic in the open octants and interpolated across the coordinate planes.
    """
    x = s.position
    V = potential_cartesian(x, f)
    gV = potential_gradient(x, f)
    pi = _kinetic_momentum(s, f)
    xdot = pi / V
    pdot = 0.5 * (float(pi @ pi) / V**2 - s.e**2) * gV
    if s.e != 0.0:
        D = connection_jacobian(x, f)
        pdot = pdot + s.e * (D.T @ pi) / V
    return xdot, pdot


def cotangent_to_ellipsoidal(x, p, f: FocalTriple):
    """Ellipsoidal point and momentum components ``p_xi = sum_i p_i dx_i/dxi``."""
    pt = from_cartesian(x, f)
    J = jacobian(pt, f)
    p_lam, p_mu, p_nu = J.T @ np.asarray(p, dtype=float)
    return pt, float(p_lam), float(p_mu), float(p_nu)


def ellipsoidal_to_cotangent(pt: EllipsoidalPoint, p_ell, f: FocalTriple) -> np.ndarray:
    """Inverse of :func:`cotangent_to_ellipsoidal` (``p = J diag(1/h**2) p_ell``)."""
    J = jacobian(pt, f)
    return J @ (np.asarray(p_ell, dtype=float) * inverse_metric_factors(pt.coords, f))


def branch_values(x, p, f: FocalTriple):
    """The nodes ``xi = (lam, mu, nu)`` and the values ``K_xi``.

    Uses the regularised partials so the values stay finite on coordinate
    planes, where ``p_xi`` itself diverges.
    """
    pt = from_cartesian(x, f)
    m = np.asarray(p, dtype=float) @ regular_partials(pt, f)
    K = BRANCH_SIGNS * m**2
    K[0] -= np.sqrt(cubic(pt.lam, f)[0])
    return pt, K


def separation_line(x, p, f: FocalTriple) -> tuple[SeparationLine, float]:
    """Fit ``K = a*xi + b`` through the three branch points.

    Returns the least-squares ``(a, b)`` and the collinearity residual: the
    distance of the ``lam`` point from the line through the ``mu`` and ``nu``
    points, divided by ``max(1, max|K|, sqrt(Q(lam)))``.  The last entry is the
    size of the term cancelled inside ``K_lam``; without it the residual of
    distant states measures only round-off.  The residual is zero exactly on
    the shell ``|p|**2 = V``.
    """
    f.require_strict()
    pt, K = branch_values(x, p, f)
    xi = pt.coords
    tol = ENDPOINT_TOL * f.spread
    if xi[1] - xi[2] <= tol or xi[0] - xi[1] <= tol:
        raise DomainError(
            f"separation nodes coincide at {np.asarray(x).tolist()} (point on a focal conic)"
        )
    a, b = np.polyfit(xi, K, 1)
    slope = (K[1] - K[2]) / (xi[1] - xi[2])
    scale = max(1.0, float(np.max(np.abs(K))), float(np.sqrt(cubic(xi[0], f)[0])))
    resid = abs(K[0] - (K[2] + slope * (xi[0] - xi[2]))) / scale
    return SeparationLine(a, b), float(resid)


def momentum_from_separation(pt: EllipsoidalPoint, a: float, b: float, f: FocalTriple,
                             branch_signs=(1, 1, 1)) -> np.ndarray:
    """Cartesian momentum whose separation constants are ``(a, b)``.

    Solves ``4 Q(xi) p_xi**2 = a*xi + b + [xi is lam] sqrt(Q(lam))`` on each
    branch; the result is on the shell ``|p|**2 = V``.
    """
    xi = pt.coords
    q = np.array([cubic(t, f)[0] for t in xi])
    rhs = a * xi + b
    rhs[0] += np.sqrt(q[0])
    p2 = rhs / (4 * q)
    if np.any(p2 < 0):
        raise DomainError(f"no real momenta for (a, b) = ({a}, {b}) at {xi.tolist()}")
    p_ell = np.asarray(branch_signs, dtype=float) * np.sqrt(p2)
    return ellipsoidal_to_cotangent(pt, p_ell, f)


# --- integration -------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    e: float
    status: str = "complete"
    H: np.ndarray = dc_field(default_factory=lambda: np.empty(0))
    a: np.ndarray = dc_field(default_factory=lambda: np.empty(0))
    b: np.ndarray = dc_field(default_factory=lambda: np.empty(0))
    residual: np.ndarray = dc_field(default_factory=lambda: np.empty(0))

    COLUMNS = ("t", "x", "y", "z", "p_x", "p_y", "p_z", "H", "a", "b", "collinearity_residual")

    def rows(self):
        for k in range(len(self.t)):
            yield (self.t[k], *self.x[k], *self.p[k], self.H[k], self.a[k], self.b[k],
                   self.residual[k])

    def state(self, k: int) -> ReducedState:
        return ReducedState(self.x[k], self.p[k], self.e)


def guard_zone(x, f: FocalTriple, e: float, guard: float) -> float:
    """Signed margin to the singularity guard zone (negative inside).

    The zone is ``lam - lam3 < guard * spread`` (focal disk, across which
    ``grad V`` and ``omega`` jump, and the focal ellipse).  Charged runs also
    avoid ``mu - nu < guard * spread``: ``omega`` grows like 1/distance near
    the focal hyperbola.
    """
    eps = guard * f.spread
    if e == 0.0:
        return outer_root(x, f) - f.lam3 - eps
    pt = from_cartesian(x, f)
    return min(pt.lam - f.lam3, pt.mu - pt.nu) - eps


def integrate(s0: ReducedState, f: FocalTriple, T: float, tol: float = 1e-10,
              guard: float = 0.05, n_out: int | None = None) -> Trajectory:
    """Integrate the reduced flow for time ``T`` (negative ``T`` runs backwards).

    Adaptive Dormand-Prince 8(5,3) with ``rtol = atol = tol``.  Output is every
    accepted step, or ``n_out`` evenly spaced times from the dense output.
    Entering the guard zone ends the run with ``status == "guard"``.
    """
    f.require_strict()
    if guard_zone(s0.position, f, s0.e, guard) <= 0:
        raise SingularityError("initial state lies in the guard zone")
    e = float(s0.e)

    def rhs(_t, y):
        if not np.all(np.isfinite(y)):
            raise SingularityError("non-finite state during integration")
        xdot, pdot = flow_rhs(ReducedState(y[:3], y[3:], e), f)
        return np.concatenate([xdot, pdot])

    def hit_guard(_t, y):
        return guard_zone(y[:3], f, e, guard)

    hit_guard.terminal = True
    hit_guard.direction = -1

    t_eval = None if n_out is None else np.linspace(0.0, T, n_out)
    sol = solve_ivp(rhs, (0.0, T), s0.vector, method="DOP853", rtol=tol, atol=tol,
                    t_eval=t_eval, events=hit_guard)
    if sol.status < 0:
        raise SingularityError(f"integration failed: {sol.message}")
    y = sol.y.T
    if not np.all(np.isfinite(y)):
        raise SingularityError("non-finite state during integration")
    status = "guard" if sol.status == 1 else "complete"
    traj = Trajectory(sol.t, y[:, :3].copy(), y[:, 3:].copy(), e, status)
    _annotate(traj, f)
    return traj


def _annotate(traj: Trajectory, f: FocalTriple) -> None:
    n = len(traj.t)
    traj.H = np.array([hamiltonian(traj.state(k), f) for k in range(n)])
    traj.a = np.full(n, np.nan)
    traj.b = np.full(n, np.nan)
    traj.residual = np.full(n, np.nan)
    if traj.e != 0.0:
        return
    for k in range(n):
        try:
            (a, b), r = separation_line(traj.x[k], traj.p[k], f)
        except DomainError:
            continue
        traj.a[k], traj.b[k], traj.residual[k] = a, b, r

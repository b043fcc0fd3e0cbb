"""Harmonic potential ``V`` and connection one-form ``omega`` on the quotient R^3.

``V`` and ``omega`` satisfy ``curl omega = grad V`` and together determine the
self-dual metric ``V**-1 (dtau + omega)**2 + V dx**2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .confocal import (
    ENDPOINT_TOL,
    EllipsoidalPoint,
    FocalTriple,
    cubic,
    endpoint_flags,
    from_cartesian,
    inverse_metric_factors,
    jacobian,
    outer_root,
)
from .errors import DomainError, SingularityError

def potential(p: EllipsoidalPoint, f: FocalTriple) -> float:
    """``V = R(lam) / ((lam - mu)(lam - nu))``."""
    gap = p.lam - p.mu
    if gap <= ENDPOINT_TOL * max(f.spread, 1.0):
        raise SingularityError(f"lam={p.lam} meets mu={p.mu}: point is on the focal ellipse")
    q = cubic(p.lam, f)[0]
    return float(np.sqrt(max(q, 0.0)) / (gap * (p.lam - p.nu)))


def _radical_ratios(lam: float, f: FocalTriple) -> np.ndarray:
    """``sqrt(Q(lam)) / (lam - lam_i)`` with coincident constants cancelled exactly."""
    lams = f.values
    d = lam - lams
    out = np.empty(3)
    for i in range(3):
        others = [j for j in range(3) if j != i]
        twin = next((j for j in others if lams[j] == lams[i]), None)
        if twin is not None:
            rest = [j for j in others if j != twin]
            out[i] = np.sqrt(np.prod(d[rest]))
        else:
            out[i] = np.sqrt(np.prod(d[others]) / d[i]) if d[i] > 0 else np.inf
    return out


def potential_cartesian(c, f: FocalTriple) -> float:
    """Evaluate ``V`` directly from Cartesian coordinates.

    ``1/V = sqrt(Q(lam)) * sum x_i**2 / (lam - lam_i)**2`` where ``lam`` labels
    the confocal quadric through ``c``.  Works for coincident focal constants,
    where it reduces to the flat and two-centre potentials.
    """
    c = np.asarray(c, dtype=float)
    lam = outer_root(c, f)
    lams = f.values
    top = lam - f.lam3
    if f.is_strict and top <= ENDPOINT_TOL * f.spread:
        # Focal disk z = 0: V vanishes inside, is singular on the rim.
        return potential(from_cartesian(c, f), f)

    d = lam - lams
    weights = _radical_ratios(lam, f)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(d > 0, c**2 / d, 0.0)
    top_group = lams == f.lam3
    if top < 1e-3 * max(f.spread, float(c @ c)):
        # sum(u) == 1 on the quadric; the complement is accurate near lam3.
        u_top = 1.0 - u[~top_group].sum()
        inv = float(u[~top_group] @ weights[~top_group] + u_top * weights[top_group][0])
    else:
        inv = float(u @ weights)
    if not inv > 0 or not np.isfinite(inv):
        raise SingularityError(f"potential is singular at {c.tolist()}")
    return 1.0 / inv


def potential_gradient(c, f: FocalTriple) -> np.ndarray:
    """Analytic ``grad V`` by implicit differentiation of the quadric label.

    Smooth across coordinate planes; undefined on the focal disk.
    """
    c = np.asarray(c, dtype=float)
    lam = outer_root(c, f)
    d = lam - f.values
    if np.any(d <= ENDPOINT_TOL * max(f.spread, 1.0)):
        raise SingularityError(f"gradient undefined at {c.tolist()} (lam on a focal constant)")
    q, dq = cubic(lam, f)
    rq = np.sqrt(q)
    P = np.sum(c**2 / d**2)
    P3 = np.sum(c**2 / d**3)
    W = rq * P
    dlam = 2.0 * c / (d * P)
    dW = 2.0 * rq * c / d**2 + (0.5 * dq / rq * P - 2.0 * rq * P3) * dlam
    return -dW / W**2


def connection(p: EllipsoidalPoint, f: FocalTriple) -> tuple[float, float]:
    """The ``dmu`` and ``dnu`` components of ``omega``; the ``dlam`` part is zero.

    The ``dmu`` term carries the opposite sign to the classical formula; only
    with this sign does ``curl omega = grad V`` hold.
    """
    f.require_strict()
    if any(endpoint_flags(p, f)) or any(p.degenerate):
        raise DomainError("connection needs a strictly interior point (S, T != 0)")
    lam, mu, nu = p.lam, p.mu, p.nu
    if lam - mu <= ENDPOINT_TOL * f.spread:
        raise SingularityError("lam meets mu")
    S = np.sqrt(-cubic(mu, f)[0])
    T = np.sqrt(cubic(nu, f)[0])
    omega_nu = 0.5 * (lam - nu) / ((mu - lam) * (mu - nu)) * S / T
    omega_mu = -0.5 * (lam - mu) / ((nu - lam) * (nu - mu)) * T / S
    return float(omega_mu), float(omega_nu)


def octant_parity(signs) -> int:
    return int(np.prod(signs))


def _connection_in_chart(c, f: FocalTriple) -> np.ndarray:
    p = from_cartesian(c, f)
    omega_mu, omega_nu = connection(p, f)
    J = jacobian(p, f)
    w = np.array([0.0, omega_mu, omega_nu]) * inverse_metric_factors(p.coords, f)
    return octant_parity(p.signs) * (J @ w)


def connection_cartesian(c, f: FocalTriple) -> np.ndarray:
    """Cartesian components of ``omega``.

    The chart form is pulled back through the octant's Jacobian and multiplied
    by the octant parity, so that ``curl omega = +grad V`` in every octant (a
    plain pullback flips the sign of the curl under reflections).  The result
    is smooth across the coordinate planes away from the focal disk; within
    ``PLANE_BAND`` of a plane, where the chart degenerates, it is interpolated
    from points on both sides.
    """
    c = np.asarray(c, dtype=float)
    p = from_cartesian(c, f)
    if p.lam - p.mu <= ENDPOINT_TOL * f.spread or p.degenerate[0]:
        raise SingularityError(f"omega is undefined on the focal disk, at {c.tolist()}")
    # Interpolation nodes sit exactly on the band edge, hence >=.
    if np.min(np.abs(c)) >= PLANE_BAND * np.sqrt(f.spread) and not any(p.degenerate):
        return _connection_in_chart(c, f)
    return _interpolate_across_plane(c, f, connection_cartesian)


# Half-width, in units of sqrt(spread), of the slab around a coordinate plane
# in which omega and its derivatives are interpolated rather than evaluated.
PLANE_BAND = 1e-4


def _interpolate_across_plane(c, f: FocalTriple, fun):
    """Four-point Lagrange interpolation of ``fun`` across the nearest plane.

    Nodes sit at ``+-delta`` and ``+-2 delta`` from the plane, where the chart
    formulas still carry close to full precision.
    """
    axis = int(np.argmin(np.abs(c)))
    delta = PLANE_BAND * np.sqrt(f.spread)
    nodes = np.array([-2.0, -1.0, 1.0, 2.0]) * delta
    base = c.copy()
    base[axis] = 0.0
    values = []
    for t in nodes:
        q = base.copy()
        q[axis] = t
        values.append(fun(q, f))
    # Lagrange weights at the actual offset from the plane.
    t0 = c[axis]
    w = [np.prod([(t0 - nodes[m]) / (nodes[k] - nodes[m]) for m in range(4) if m != k])
         for k in range(4)]
    return np.tensordot(w, np.array(values), axes=1)


def _connection_partials_chart(p: EllipsoidalPoint, f: FocalTriple) -> np.ndarray:
    """``D[i, j] = d omega_i / d x_j`` by the ellipsoidal chain rule."""
    xi = p.coords
    lam, mu, nu = xi
    lams = f.values
    omega_mu, omega_nu = connection(p, f)
    J = jacobian(p, f)
    g_inv = inverse_metric_factors(xi, f)
    q = np.array([cubic(t, f) for t in xi])
    logq = q[:, 1] / q[:, 0]

    # Log-derivatives of omega_xi with respect to (lam, mu, nu).
    dlog_omega = {
        1: np.array([
            1.0 / (lam - mu) + 1.0 / (nu - lam),
            -1.0 / (lam - mu) + 1.0 / (nu - mu) - 0.5 * logq[1],
            0.5 * logq[2] - 1.0 / (nu - lam) - 1.0 / (nu - mu),
        ]),
        2: np.array([
            1.0 / (lam - nu) + 1.0 / (mu - lam),
            0.5 * logq[1] - 1.0 / (mu - lam) - 1.0 / (mu - nu),
            -1.0 / (lam - nu) + 1.0 / (mu - nu) - 0.5 * logq[2],
        ]),
    }
    comps = {1: omega_mu, 2: omega_nu}

    # dT[i, k, e] = d/dxi_e of omega_k * J[i, k] * g_inv[k]
    dT = np.zeros((3, 3, 3))
    for k in (1, 2):
        dlog_g = np.array([1.0 / (xi[k] - xi[e]) if e != k else 0.0 for e in range(3)])
        dlog_g[k] = logq[k] - sum(1.0 / (xi[k] - xi[e]) for e in range(3) if e != k)
        for i in range(3):
            dlog_J = np.array([
                0.5 / (xi[e] - lams[i]) - (1.0 / (xi[k] - lams[i]) if e == k else 0.0)
                for e in range(3)
            ])
            term = comps[k] * J[i, k] * g_inv[k]
            dT[i, k] = term * (dlog_omega[k] + dlog_g + dlog_J)
    d_chart = dT.sum(axis=1)  # d omega_i / d xi_e
    dxi_dx = (J * g_inv).T  # dxi_e / dx_j
    return octant_parity(p.signs) * (d_chart @ dxi_dx)


def connection_jacobian(c, f: FocalTriple) -> np.ndarray:
    """``D[i, j] = d omega_i / d x_j``.

    Analytic in the chart interior.  Within ``PLANE_BAND`` of a coordinate
    plane the analytic values are interpolated across the plane, like
    ``omega`` itself.  Finite differences are avoided there: they amplify
    the ~1e-11 noise of the near-plane chart values into ~1e-6 errors in
    ``D``, which shows up as energy drift in charged runs.
    """
    c = np.asarray(c, dtype=float)
    p = from_cartesian(c, f)
    if np.min(np.abs(c)) >= PLANE_BAND * np.sqrt(f.spread) and not any(p.degenerate):
        return _connection_partials_chart(p, f)
    if p.lam - p.mu <= ENDPOINT_TOL * f.spread or p.degenerate[0]:
        raise SingularityError(f"omega is undefined on the focal disk, at {c.tolist()}")
    return _interpolate_across_plane(c, f, connection_jacobian)


def staeckel_decomposition(p: EllipsoidalPoint, f: FocalTriple) -> float:
    """Residual ``V - f_lam / h_lam**2`` with ``f_lam = 1/(4 R(lam))``.

    ``f_mu = f_nu = 0``; the residual vanishes identically, including on the
    ``mu``/``nu`` range endpoints where the chart degenerates.
    """
    q = cubic(p.lam, f)[0]
    inv_h2 = 4.0 * q / ((p.lam - p.mu) * (p.lam - p.nu))
    return potential(p, f) - inv_h2 / (4.0 * np.sqrt(q))


def special_potential(kind: str, c, f: FocalTriple) -> float:
    """Closed-form potentials of the degenerate families.

    ``flat`` (all constants equal): ``1/r``.  ``eguchi_hanson`` (``lam2 ==
    lam3 > lam1``): ``(1/r1 + 1/r2)/2`` with centres ``(+-sqrt(lam3 - lam1), 0, 0)``.
    """
    c = np.asarray(c, dtype=float)
    if kind == "flat":
        if not f.lam1 == f.lam2 == f.lam3:
            raise DomainError("flat potential needs lam1 == lam2 == lam3")
        return 1.0 / float(np.linalg.norm(c))
    if kind == "eguchi_hanson":
        if not (f.lam2 == f.lam3 and f.lam1 < f.lam2):
            raise DomainError("Eguchi-Hanson potential needs lam2 == lam3 > lam1")
        a = np.sqrt(f.lam3 - f.lam1)
        r1 = np.linalg.norm(c - [a, 0.0, 0.0])
        r2 = np.linalg.norm(c + [a, 0.0, 0.0])
        return 0.5 * (1.0 / r1 + 1.0 / r2)
    raise DomainError(f"unknown special potential {kind!r}")


@dataclass
class FieldSample:
    point: np.ndarray
    V: float
    gradV: np.ndarray
    omega: np.ndarray
    flags: tuple = ()


def sample(c, f: FocalTriple) -> FieldSample:
    """Evaluate ``V``, ``grad V`` and ``omega`` at one point.

    ``omega`` is NaN (with a ``"chart"`` flag) where the connection is not
    defined: coordinate planes, or coincident focal constants.
    """
    c = np.asarray(c, dtype=float)
    flags = []
    V = potential_cartesian(c, f)
    try:
        gradV = potential_gradient(c, f)
    except SingularityError:
        gradV = np.full(3, np.nan)
        flags.append("gradient")
    try:
        omega = connection_cartesian(c, f)
    except DomainError:
        omega = np.full(3, np.nan)
        flags.append("chart")
    return FieldSample(c, V, gradV, omega, tuple(flags))


# --- finite-difference field identities ------------------------------------


# Central-difference weights (offset multiples of h) for first and second
# derivatives at orders 2 and 4.
_D1 = {2: ((1, 0.5), (-1, -0.5)), 4: ((2, -1 / 12), (1, 8 / 12), (-1, -8 / 12), (-2, 1 / 12))}
_D2 = {2: ((1, 1.0), (0, -2.0), (-1, 1.0)),
       4: ((2, -1 / 12), (1, 16 / 12), (0, -30 / 12), (-1, 16 / 12), (-2, -1 / 12))}


def _stencil(fun, c, h, e, weights):
    return sum(w * np.asarray(fun(c + k * h * e)) for k, w in weights)


def fd_gradient(fun, c, h: float, order: int = 4) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.array([_stencil(fun, c, h, e, _D1[order]) / h for e in np.eye(3)])


def fd_laplacian(fun, c, h: float, order: int = 4) -> float:
    c = np.asarray(c, dtype=float)
    return float(sum(_stencil(fun, c, h, e, _D2[order]) for e in np.eye(3)) / h**2)


def fd_curl(fun, c, h: float, order: int = 4) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    D = np.array([_stencil(fun, c, h, e, _D1[order]) / h for e in np.eye(3)])
    # D[j, i] = d F_i / d x_j
    return np.array([D[1, 2] - D[2, 1], D[2, 0] - D[0, 2], D[0, 1] - D[1, 0]])


def sample_points(f: FocalTriple, n: int, rng: np.random.Generator, guard: float = 0.05,
                  half_width: float | None = None) -> np.ndarray:
    """Uniform points in a box, rejecting those within ``guard * spread`` of the
    coordinate planes (which contain the focal conics) or of the origin."""
    ell = np.sqrt(max(f.spread, 1.0))
    if half_width is None:
        half_width = 1.5 * ell
    margin = guard * max(f.spread, 1.0)
    out = []
    while len(out) < n:
        c = rng.uniform(-half_width, half_width, 3)
        if np.min(np.abs(c)) < margin or np.linalg.norm(c) < margin:
            continue
        out.append(c)
    return np.array(out)


@dataclass
class FieldReport:
    points: np.ndarray
    laplacian: np.ndarray
    curl: np.ndarray | None = None
    curl_sign: int | None = None
    tol: float = 1e-4
    failures: list = dc_field(default_factory=list)

    @property
    def laplacian_max(self) -> float:
        return float(np.max(self.laplacian))

    @property
    def curl_max(self) -> float | None:
        return None if self.curl is None else float(np.max(self.curl))

    @property
    def passed(self) -> bool:
        return not self.failures


def field_checks(f: FocalTriple, n_samples: int = 100, seed: int = 0, h: float = 1e-3,
                 guard: float = 0.05, tol: float = 1e-4, order: int = 4) -> FieldReport:
    """Finite-difference harmonicity of ``V`` and ``curl omega = s grad V``.

    The Laplacian residual is normalised by ``|grad V| / a`` with ``a`` the
    semi-axis ``sqrt(lam - lam1)`` of the quadric through the point.  The curl
    sign ``s`` is fixed once per run from the data and then enforced at every
    point.  The curl check needs distinct focal constants and is skipped
    otherwise.

    ``order`` selects the central-difference stencil.  Near the focal
    hyperbola the third derivatives of ``omega`` are large enough that the
    order-2 stencil alone contributes ~1e-4 at ``h = 1e-3``.
    """
    rng = np.random.default_rng(seed)
    pts = sample_points(f, n_samples, rng, guard)
    V = lambda x: potential_cartesian(x, f)  # noqa: E731

    lap = np.empty(len(pts))
    grads = np.empty((len(pts), 3))
    for k, c in enumerate(pts):
        g = fd_gradient(V, c, h, order)
        grads[k] = g
        axis = np.sqrt(outer_root(c, f) - f.lam1)
        lap[k] = abs(fd_laplacian(V, c, h, order)) / (np.linalg.norm(g) / axis)

    report = FieldReport(pts, lap, tol=tol)
    report.failures += [("laplacian", k) for k in np.flatnonzero(lap > tol)]
    if not f.is_strict:
        return report

    W = lambda x: connection_cartesian(x, f)  # noqa: E731
    curls = np.array([fd_curl(W, c, h, order) for c in pts])
    sign = 1 if np.sum(curls * grads) >= 0 else -1
    res = np.linalg.norm(curls - sign * grads, axis=1) / np.linalg.norm(grads, axis=1)
    report.curl, report.curl_sign = res, sign
    report.failures += [("curl", k) for k in np.flatnonzero(res > tol)]
    return report

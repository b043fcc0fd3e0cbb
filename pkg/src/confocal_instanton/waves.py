"""Separated Schrodinger equation ``lap psi = -E V psi`` for zero charge.

In ellipsoidal coordinates the flat Laplacian of a product
``psi = L(lam) M(mu) N(nu)`` is

    lap psi / psi = sum_xi (4 Q u'' + 2 Q' u') / (u * prod_{eta != xi} (xi - eta)),

and ``V = sqrt(Q(lam)) / prod_{eta != lam} (lam - eta)``.  The equation thus says
that ``(4 Q u'' + 2 Q' u')/u + [xi is lam] E sqrt(Q)`` has vanishing second
divided difference over the three nodes, i.e. equals ``a*xi + b``:

    4 Q u'' + 2 Q' u' + ([xi is lam] E sqrt(Q) - a*xi - b) u = 0.

:func:`pde_residual` checks products of branch solutions against the full PDE
by finite differences in Cartesian coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .confocal import EllipsoidalPoint, FocalTriple, cubic, from_cartesian, to_cartesian
from .errors import DomainError
from .field import _D2, _stencil, potential_cartesian

BRANCHES = ("lam", "mu", "nu")
# Integration keeps this fraction of the focal spread away from branch endpoints,
# which are regular singular points of the ODEs.
ENDPOINT_MARGIN = 1e-3
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14
OVERFLOW = 1e300


def branch_range(branch: str, f: FocalTriple) -> tuple[float, float]:
    if branch == "lam":
        return f.lam3, np.inf
    if branch == "mu":
        return f.lam2, f.lam3
    if branch == "nu":
        return f.lam1, f.lam2
    raise DomainError(f"unknown branch {branch!r}")


def ode_coefficients(branch: str, xi: float, E: float, a: float, b: float,
                     f: FocalTriple) -> tuple[float, float, float]:
    """Coefficients ``(c2, c1, c0)`` of ``c2 u'' + c1 u' + c0 u = 0`` on one branch."""
    lo, hi = branch_range(branch, f)
    if not lo < xi < hi:
        raise DomainError(f"xi={xi} outside the open {branch} range ({lo}, {hi})")
    q, dq = cubic(xi, f)
    c0 = -a * xi - b
    if branch == "lam":
        c0 += E * np.sqrt(q)
    return 4.0 * q, 2.0 * dq, c0


@dataclass(frozen=True)
class BranchODE:
    """One separated ODE on ``interval`` within the branch range.

    ``xi0`` is where initial data are imposed (default: interval midpoint).
    """

    branch: str
    interval: tuple
    E: float
    a: float
    b: float
    focal: FocalTriple
    xi0: float | None = None

    def __post_init__(self):
        lo, hi = self.interval
        rlo, rhi = branch_range(self.branch, self.focal)
        eps = ENDPOINT_MARGIN * self.focal.spread
        if not (rlo + eps <= lo < hi <= rhi - eps):
            raise DomainError(
                f"interval {self.interval} must lie in [{rlo + eps}, {rhi - eps}] "
                f"for branch {self.branch}"
            )
        if self.xi0 is not None and not lo <= self.xi0 <= hi:
            raise DomainError(f"xi0={self.xi0} outside interval {self.interval}")

    @property
    def start(self) -> float:
        return 0.5 * sum(self.interval) if self.xi0 is None else self.xi0

    def rhs(self, xi, y):
        c2, c1, c0 = ode_coefficients(self.branch, xi, self.E, self.a, self.b, self.focal)
        u, du = y
        return [du, -(c1 * du + c0 * u) / c2]


@dataclass
class BranchSolution:
    xi: np.ndarray
    u: np.ndarray
    du: np.ndarray
    status: str
    _pieces: tuple = ()

    def __call__(self, xi) -> np.ndarray:
        """Dense-output values ``(u, u')`` at ``xi`` (scalar)."""
        for piece in self._pieces:
            if piece.t_min <= xi <= piece.t_max:
                return piece(xi)
        raise DomainError(f"xi={xi} outside the integrated interval")


def integrate_branch(ode: BranchODE, u0: float, du0: float, n: int = 101) -> BranchSolution:
    """Integrate from ``ode.start`` to both ends of the interval.

    Returns ``u`` and ``u'`` at ``n`` evenly spaced points; ``status`` is
    ``"overflow"`` if the solution stops being finite or exceeds ``1e300``.
    """
    lo, hi = ode.interval
    x0 = ode.start
    grid = np.linspace(lo, hi, n)
    pieces = []
    status = "ok"

    def blown(_xi, y):
        return OVERFLOW - max(abs(y[0]), abs(y[1]))

    blown.terminal = True
    for end in (lo, hi):
        if end == x0:
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            sol = solve_ivp(ode.rhs, (x0, end), [u0, du0], method="DOP853", rtol=ODE_RTOL,
                            atol=ODE_ATOL, dense_output=True, events=blown)
        if sol.status != 0 or not np.all(np.isfinite(sol.y)):
            status = "overflow"
        pieces.append(sol.sol)
    if not pieces:
        raise DomainError("degenerate interval")
    out = BranchSolution(grid, np.empty(n), np.empty(n), status, tuple(pieces))
    if status == "ok":
        vals = np.array([out(x) for x in grid])
        out.u, out.du = vals[:, 0], vals[:, 1]
    else:
        out.u[:] = np.nan
        out.du[:] = np.nan
    return out


# --- product solutions and the PDE oracle --------------------------------------


@dataclass
class ProductSolution:
    """``psi = L(lam) M(mu) N(nu)`` assembled from three branch solutions."""

    focal: FocalTriple
    factors: dict

    def __call__(self, c) -> float:
        p = from_cartesian(c, self.focal)
        out = 1.0
        for name, xi in zip(BRANCHES, p.coords):
            out *= self.factors[name](xi)[0]
        return float(out)


def box_points(centre: EllipsoidalPoint, half_widths, n: int, f: FocalTriple,
               rng: np.random.Generator) -> np.ndarray:
    """Cartesian images of ``n`` uniform points in an ellipsoidal box."""
    c = centre.coords
    hw = np.asarray(half_widths, dtype=float)
    pts = []
    for _ in range(n):
        lam, mu, nu = c + rng.uniform(-1, 1, 3) * hw
        pts.append(to_cartesian(EllipsoidalPoint(lam, mu, nu, centre.signs), f))
    return np.array(pts)


def product_solution(E: float, a: float, b: float, f: FocalTriple, points, h: float,
                     perturb: dict | None = None, initial=(1.0, 0.0)) -> ProductSolution:
    """Branch solutions covering every coordinate the stencils around ``points`` touch.

    ``perturb`` maps a branch name to ``(da, db)`` added to that branch only,
    which breaks the separation identity on purpose.
    """
    f.require_strict()
    perturb = perturb or {}
    stencil = []
    for c in np.asarray(points, dtype=float):
        for e in np.eye(3):
            for k in (-2, -1, 0, 1, 2):
                stencil.append(from_cartesian(c + k * h * e, f).coords)
    stencil = np.array(stencil)
    factors = {}
    for j, name in enumerate(BRANCHES):
        lo, hi = stencil[:, j].min(), stencil[:, j].max()
        pad = 1e-6 * f.spread + 1e-3 * (hi - lo)
        da, db = perturb.get(name, (0.0, 0.0))
        ode = BranchODE(name, (lo - pad, hi + pad), E, a + da, b + db, f)
        sol = integrate_branch(ode, *initial, n=2)
        if sol.status != "ok":
            raise OverflowError(f"branch {name} overflowed")
        factors[name] = sol
    return ProductSolution(f, factors)


def pde_residual(E: float, a: float, b: float, f: FocalTriple, points, h: float = 1e-3,
                 order: int = 2, perturb: dict | None = None) -> float:
    """Max over ``points`` of ``|lap psi + E V psi| / (|psi| V)`` by finite differences."""
    psi = product_solution(E, a, b, f, points, h, perturb)
    worst = 0.0
    for c in np.asarray(points, dtype=float):
        value = psi(c)
        lap = sum(_stencil(psi, c, h, e, _D2[order]) for e in np.eye(3)) / h**2
        V = potential_cartesian(c, f)
        worst = max(worst, abs(lap + E * V * value) / (abs(value) * V))
    return float(worst)

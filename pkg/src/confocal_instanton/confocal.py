"""Confocal ellipsoidal coordinates on Euclidean 3-space.

For focal constants ``lam1 < lam2 < lam3`` every point ``(x, y, z)`` lies on
three quadrics of the confocal family

    x**2/(t - lam1) + y**2/(t - lam2) + z**2/(t - lam3) = 1,

one for each root ``t`` of the cubic ``G`` below.  The roots interlace with the
focal constants as ``lam1 <= nu <= lam2 <= mu <= lam3 <= lam``.  Each chart
covers a single octant, so points carry an explicit sign triple.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# Root isolation: bisect down to this fraction of the focal spread, then polish.
BISECT_WIDTH = 1e-3
NEWTON_RTOL = 1e-14
# A root closer than this (relative to the focal spread) to an interval end is
# reported as endpoint-degenerate.
ENDPOINT_TOL = 1e-10
_MAX_ITER = 200


@dataclass(frozen=True)
class FocalTriple:
    """The focal constants ``lam1 <= lam2 <= lam3`` of a confocal family."""

    lam1: float
    lam2: float
    lam3: float

    def __post_init__(self):
        vals = (self.lam1, self.lam2, self.lam3)
        if not all(np.isfinite(v) for v in vals):
            raise DomainError("focal constants must be finite")
        if not (self.lam1 <= self.lam2 <= self.lam3):
            raise DomainError("focal constants must be nondecreasing")

    @classmethod
    def of(cls, values) -> "FocalTriple":
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)

    @property
    def values(self) -> np.ndarray:
        return np.array([self.lam1, self.lam2, self.lam3])

    @property
    def spread(self) -> float:
        """``lam3 - lam1``, the natural length**2 scale of the family."""
        return self.lam3 - self.lam1

    @property
    def is_strict(self) -> bool:
        return self.lam1 < self.lam2 < self.lam3

    def require_strict(self) -> None:
        if not self.is_strict:
            raise DomainError(
                f"operation needs distinct focal constants, got {self.values.tolist()}"
            )


@dataclass(frozen=True)
class EllipsoidalPoint:
    """Ellipsoidal coordinates plus the octant they are dressed with.

    ``degenerate`` flags, in the order (lam, mu, nu), roots that sit on an end
    of their interval; these are points on coordinate planes or on the focal
    set, where the chart itself is singular.
    """

    lam: float
    mu: float
    nu: float
    signs: tuple = (1, 1, 1)
    degenerate: tuple = (False, False, False)

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.lam, self.mu, self.nu])

    @property
    def is_interior(self) -> bool:
        return not any(self.degenerate)


class ScaleFactors(NamedTuple):
    h_lambda: float
    h_mu: float
    h_nu: float


def cubic(t: float, f: FocalTriple) -> tuple[float, float]:
    """Return ``Q(t) = (t-lam1)(t-lam2)(t-lam3)`` and its derivative."""
    a, b, c = t - f.lam1, t - f.lam2, t - f.lam3
    return a * b * c, a * b + b * c + c * a


def _signs_of(values) -> tuple:
    return tuple(1 if v >= 0 else -1 for v in values)


def _denominators(f: FocalTriple) -> np.ndarray:
    l1, l2, l3 = f.values
    return np.array([(l1 - l2) * (l1 - l3), (l2 - l1) * (l2 - l3), (l3 - l1) * (l3 - l2)])


def check_interlacing(p: EllipsoidalPoint, f: FocalTriple, tol: float = ENDPOINT_TOL) -> None:
    eps = tol * max(f.spread, 1.0)
    ok = (
        f.lam1 - eps <= p.nu <= f.lam2 + eps
        and f.lam2 - eps <= p.mu <= f.lam3 + eps
        and p.lam >= f.lam3 - eps
    )
    if not ok:
        raise DomainError(
            f"ellipsoidal point ({p.lam}, {p.mu}, {p.nu}) violates "
            f"lam1 <= nu <= lam2 <= mu <= lam3 <= lam for {f.values.tolist()}"
        )


def endpoint_flags(p: EllipsoidalPoint, f: FocalTriple, tol: float = ENDPOINT_TOL) -> tuple:
    eps = tol * f.spread
    return (
        p.lam - f.lam3 <= eps,
        min(p.mu - f.lam2, f.lam3 - p.mu) <= eps,
        min(p.nu - f.lam1, f.lam2 - p.nu) <= eps,
    )


def _require_interior(p: EllipsoidalPoint, f: FocalTriple) -> None:
    f.require_strict()
    check_interlacing(p, f)
    flags = endpoint_flags(p, f)
    if any(flags) or any(p.degenerate):
        raise DomainError(
            f"point ({p.lam}, {p.mu}, {p.nu}) is on a coordinate-range endpoint; "
            "the ellipsoidal chart is degenerate there"
        )


def to_cartesian(p: EllipsoidalPoint, f: FocalTriple) -> np.ndarray:
    """Map ellipsoidal coordinates to the Cartesian point in the octant ``p.signs``."""
    f.require_strict()
    check_interlacing(p, f)
    xi = p.coords
    num = np.array([np.prod(xi - li) for li in f.values])
    sq = np.maximum(num / _denominators(f), 0.0)
    return np.asarray(p.signs, dtype=float) * np.sqrt(sq)


def _bracketed_root(g, dg, lo: float, hi: float, falling: bool, scale: float) -> float:
    """Locate the sign change of ``g`` on ``[lo, hi]``.

    ``falling`` means ``g`` goes from positive to non-positive; zeros count on
    the far side of the transition so that roots lying exactly on an interval
    end are found without a separate case analysis.
    """
    if hi <= lo:
        return lo
    snap = ENDPOINT_TOL * scale
    root = _refine(g, dg, lo, hi, falling, scale)
    for end in (lo, hi):
        if abs(root - end) <= snap and g(end) == 0.0:
            return end
    return root


def _refine(g, dg, lo, hi, falling, scale):
    def left_side(t):
        v = g(t)
        return v > 0 if falling else v < 0

    width = BISECT_WIDTH * scale
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if left_side(mid):
            lo = mid
        else:
            hi = mid

    t = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        gt = g(t)
        if gt == 0.0:
            return t
        if (gt > 0) == falling:
            lo = t
        else:
            hi = t
        d = dg(t)
        step = gt / d if d != 0.0 else np.inf
        t_new = t - step
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
            step = t - t_new
        t = t_new
        if abs(step) <= NEWTON_RTOL * max(abs(t), scale) or hi - lo <= NEWTON_RTOL * max(abs(t), scale):
            break
    return t


def _secular(c, f: FocalTriple):
    x2, y2, z2 = np.asarray(c, dtype=float) ** 2
    l1, l2, l3 = f.values

    def g(t):
        a, b, d = t - l1, t - l2, t - l3
        return x2 * b * d + y2 * a * d + z2 * a * b - a * b * d

    def dg(t):
        a, b, d = t - l1, t - l2, t - l3
        return x2 * (b + d) + y2 * (a + d) + z2 * (a + b) - (a * b + b * d + d * a)

    return g, dg


def outer_root(c, f: FocalTriple) -> float:
    """The coordinate ``lam >= lam3`` of ``c``; valid for degenerate triples too.

    The root is bracketed by ``max(lam3, lam1 + r**2) <= lam <= lam3 + r**2``.
    """
    c = np.asarray(c, dtype=float)
    r2 = float(c @ c)
    g, dg = _secular(c, f)
    lo = max(f.lam3, f.lam1 + r2)
    hi = f.lam3 + r2
    scale = max(f.spread, r2, np.finfo(float).tiny)
    return _bracketed_root(g, dg, lo, hi, falling=True, scale=scale)


def from_cartesian(c, f: FocalTriple) -> EllipsoidalPoint:
    """Ellipsoidal coordinates of a Cartesian point (total on R^3)."""
    f.require_strict()
    c = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(c)):
        raise DomainError("cartesian point must be finite")
    g, dg = _secular(c, f)
    scale = f.spread
    nu = _bracketed_root(g, dg, f.lam1, f.lam2, falling=True, scale=scale)
    mu = _bracketed_root(g, dg, f.lam2, f.lam3, falling=False, scale=scale)
    lam = outer_root(c, f)
    p = EllipsoidalPoint(float(lam), float(mu), float(nu), _signs_of(c))
    flags = tuple(bool(v) for v in endpoint_flags(p, f))
    return EllipsoidalPoint(p.lam, p.mu, p.nu, p.signs, flags)


def scale_factors(p: EllipsoidalPoint, f: FocalTriple) -> ScaleFactors:
    """Lame coefficients of the flat metric ``h_lam**2 dlam**2 + ...``."""
    _require_interior(p, f)
    lam, mu, nu = p.coords
    R = np.sqrt(cubic(lam, f)[0])
    S = np.sqrt(-cubic(mu, f)[0])
    T = np.sqrt(cubic(nu, f)[0])
    return ScaleFactors(
        0.5 * np.sqrt((lam - mu) * (lam - nu)) / R,
        0.5 * np.sqrt((lam - mu) * (mu - nu)) / S,
        0.5 * np.sqrt((nu - mu) * (nu - lam)) / T,
    )


def inverse_metric_factors(xi, f: FocalTriple) -> np.ndarray:
    """``1/h_xi**2 = 4 Q(xi) / prod_{eta != xi} (xi - eta)`` for ``xi = (lam, mu, nu)``.

    Finite on the whole closed chart (it vanishes on range endpoints).
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty(3)
    for k in range(3):
        others = np.delete(xi, k)
        out[k] = 4.0 * cubic(xi[k], f)[0] / np.prod(xi[k] - others)
    return out


def regular_partials(p: EllipsoidalPoint, f: FocalTriple) -> np.ndarray:
    """``M[i, k] = 2 sqrt|Q(xi_k)| * dx_i/dxi_k`` written without any 0/0.

    Unlike the Jacobian this stays finite on coordinate planes, which is what
    makes the separation constants computable along whole trajectories.
    """
    f.require_strict()
    xi = p.coords
    lams = f.values
    dens = np.abs(_denominators(f))
    M = np.empty((3, 3))
    for i in range(3):
        others_l = np.delete(lams, i)
        for k in range(3):
            own = abs(np.prod(xi[k] - others_l))
            rest = abs(np.prod(np.delete(xi, k) - lams[i]))
            sgn = p.signs[i] * (1.0 if xi[k] >= lams[i] else -1.0)
            M[i, k] = sgn * np.sqrt(own * rest / dens[i])
    return M


def jacobian(p: EllipsoidalPoint, f: FocalTriple) -> np.ndarray:
    """``J[i, k] = d x_i / d xi_k`` with columns ordered (lam, mu, nu).

    Uses ``dx_i/dxi = x_i / (2 (xi - lam_i))`` in factored form.
    """
    _require_interior(p, f)
    sqrtq = np.sqrt(np.abs([cubic(t, f)[0] for t in p.coords]))
    return regular_partials(p, f) / (2.0 * sqrtq)


def quadric_residual(c, lam: float, f: FocalTriple) -> float:
    """``sum x_i**2/(lam - lam_i) - 1`` for the confocal quadric labelled ``lam``."""
    if not lam > f.lam3:
        raise DomainError(f"quadric label {lam} must exceed lam3={f.lam3}")
    c = np.asarray(c, dtype=float)
    return float(np.sum(c**2 / (lam - f.values)) - 1.0)

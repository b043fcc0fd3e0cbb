"""SU(2) side: group points, the adjoint row ``l``, profile functions and moment maps.

Conventions
-----------
Group elements are unit quaternions ``q = (w, x, y, z)``.  The Lie algebra basis
is ``X_i = -e_i / 2`` with ``e_i`` the imaginary units, so that
``[X_1, X_2] = -X_3``.  Left-invariant fields ``L_i`` generate right
translations ``g -> g exp(t X_i)``; right-invariant fields ``R_i`` generate left
translations ``g -> exp(t X_i) g``.  Then ``R_i = O_ij L_j`` with ``O`` the
rotation matrix of ``q`` (``v -> q v q*``), and its first row ``l`` obeys
``L_i l_j = -eps_ijk l_k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .confocal import FocalTriple
from .errors import DomainError


@dataclass(frozen=True)
class GroupPoint:
    """A point of SU(2) as a unit quaternion ``(w, x, y, z)``; renormalised on construction."""

    q: tuple

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        n = np.linalg.norm(q)
        if q.shape != (4,) or not np.isfinite(n) or n == 0.0:
            raise DomainError(f"not a quaternion: {self.q!r}")
        object.__setattr__(self, "q", tuple(float(v) for v in q / n))

    @classmethod
    def identity(cls) -> "GroupPoint":
        return cls((1.0, 0.0, 0.0, 0.0))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "GroupPoint":
        """Haar-distributed element (uniform on the 3-sphere)."""
        return cls(tuple(rng.normal(size=4)))

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "GroupPoint":
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        return cls((np.cos(angle / 2), *(np.sin(angle / 2) * axis)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.q)


def quat_mul(a, b) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def generator_exp(i: int, t: float) -> np.ndarray:
    """``exp(t X_i)`` as a quaternion, with ``X_i = -e_i/2``."""
    out = np.zeros(4)
    out[0] = np.cos(t / 2)
    out[1 + i] = -np.sin(t / 2)
    return out


def left_invariant_flow(g: GroupPoint, i: int, t: float) -> GroupPoint:
    """Flow of ``L_i`` for time ``t``: ``g exp(t X_i)``."""
    return GroupPoint(tuple(quat_mul(g.array, generator_exp(i, t))))


def right_invariant_flow(g: GroupPoint, i: int, t: float) -> GroupPoint:
    """Flow of ``R_i`` for time ``t``: ``exp(t X_i) g``."""
    return GroupPoint(tuple(quat_mul(generator_exp(i, t), g.array)))


def adjoint(g: GroupPoint) -> np.ndarray:
    """The orthogonal matrix ``O`` with rows ``(l, m, n)`` relating ``R_i = O_ij L_j``."""
    w, x, y, z = g.q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


class ProfileTriple(NamedTuple):
    A: float
    B: float
    C: float


def profile(lam: float, f: FocalTriple) -> ProfileTriple:
    """Closed-form solution ``A = sqrt(lam - lam1)``, etc. of the Euler-type system."""
    if lam < f.lam3:
        raise DomainError(f"orbit label lam={lam} must be >= lam3={f.lam3}")
    return ProfileTriple(*np.sqrt(lam - f.values))


def euler_rhs(p: ProfileTriple) -> tuple[float, float, float]:
    """``(dA, dB, dC)/d eta = (BC, CA, AB)``."""
    A, B, C = p
    return B * C, C * A, A * B


def bgpp_metric_norms(lam: float, f: FocalTriple) -> tuple[float, float, float, float]:
    """Coefficients of ``dlam**2`` and ``(sigma^i)**2`` in the BGPP metric.

    With ``d eta = dlam / (2ABC)`` the orbit term ``ABC d eta**2`` becomes
    ``dlam**2 / (4ABC)``; the fibre terms are ``BC/A, CA/B, AB/C``.
    """
    if not lam > f.lam3:
        raise DomainError(f"metric needs lam > lam3, got {lam}")
    A, B, C = profile(lam, f)
    return 1.0 / (4 * A * B * C), B * C / A, C * A / B, A * B / C


def right_norm(lam: float, g: GroupPoint, f: FocalTriple) -> float:
    """``g(R_1, R_1) = l_1**2 BC/A + l_2**2 CA/B + l_3**2 AB/C``, i.e. ``1/V``."""
    _, g1, g2, g3 = bgpp_metric_norms(lam, f)
    l = adjoint(g)[0]
    return float(l**2 @ np.array([g1, g2, g3]))


def moment_map(lam: float, g: GroupPoint, f: FocalTriple) -> np.ndarray:
    """Moment maps of ``R_1``: ``(x, y, z) = -(l_1 A, l_2 B, l_3 C)``."""
    return -adjoint(g)[0] * np.array(profile(lam, f))

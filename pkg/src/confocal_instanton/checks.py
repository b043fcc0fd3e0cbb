"""Verification oracles shared by ``confocal-instanton verify`` and the test suite.

Each check returns a :class:`CheckResult` holding the largest residual seen,
the tolerance it is held to and the number of samples.  The tolerances below
are the documented defaults of the verify report.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp

from .bgpp import GroupPoint, adjoint, euler_rhs, left_invariant_flow, moment_map, profile, right_norm
from .confocal import (
    EllipsoidalPoint,
    FocalTriple,
    from_cartesian,
    jacobian,
    quadric_residual,
    scale_factors,
    to_cartesian,
)
from .dynamics import ReducedState, guard_zone, hamiltonian, integrate
from .field import (
    connection_cartesian,
    field_checks,
    potential,
    potential_cartesian,
    sample_points,
    special_potential,
    staeckel_decomposition,
)
from .waves import box_points, pde_residual

TOLERANCES = {
    "group_orthogonality": 1e-12,
    "group_derivative": 1e-6,
    "profile_ode": 1e-8,
    "quadric_identity": 1e-10,
    "round_trip": 1e-8,
    "metric_consistency": 1e-8,
    "harmonicity": 1e-4,
    "harmonicity_flat": 1e-6,
    "field_equation": 1e-4,
    "potential_equivalence": 1e-8,
    "route_equivalence": 1e-10,
    "staeckel": 1e-12,
    "flat_potential": 1e-10,
    "eguchi_hanson": 1e-6,
    "axis_closed_form": 1e-10,
    "energy_drift": 1e-8,
    "separation_drift": 1e-6,
    "collinearity": 1e-8,
    "charged_energy_drift": 1e-8,
    "wave_residual": 1e-3,
    "wave_sensitivity": 0.0,
}


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    samples: int
    extra: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.max_residual) and self.max_residual <= self.tolerance)

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "max_residual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "passed": self.passed,
            "samples": int(self.samples),
        }
        out.update(self.extra)
        return out


def _result(name, residuals, **extra) -> CheckResult:
    residuals = np.atleast_1d(np.asarray(residuals, dtype=float))
    return CheckResult(name, float(np.max(residuals)), TOLERANCES[name], residuals.size, extra)


def random_interior_points(f: FocalTriple, n: int, rng: np.random.Generator,
                           lam_width: float = 10.0) -> list[EllipsoidalPoint]:
    """Uniform interior ellipsoidal points with ``lam`` in ``(lam3, lam3 + lam_width]``
    and random octant signs."""
    out = []
    for _ in range(n):
        u = 1.0 - rng.uniform(size=3)
        lam = f.lam3 + lam_width * u[0]
        mu = f.lam2 + (f.lam3 - f.lam2) * u[1]
        nu = f.lam1 + (f.lam2 - f.lam1) * u[2]
        signs = tuple(int(s) for s in rng.choice([-1, 1], size=3))
        out.append(EllipsoidalPoint(lam, mu, nu, signs))
    return out


# --- group and profile -------------------------------------------------------


def check_group(n: int, rng: np.random.Generator, h: float = 1e-5) -> list[CheckResult]:
    """Orthogonality of ``O``, unit ``l`` and the flows ``L_i l_j = -eps_ijk l_k``."""
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k], eps[i, k, j] = 1.0, -1.0
    ortho = np.empty(n)
    deriv = np.empty(n)
    for s in range(n):
        g = GroupPoint.random(rng)
        O = adjoint(g)
        ortho[s] = max(np.max(np.abs(O @ O.T - np.eye(3))), abs(np.linalg.det(O) - 1.0),
                       abs(np.linalg.norm(O[0]) - 1.0))
        l = O[0]
        worst = 0.0
        for i in range(3):
            plus = adjoint(left_invariant_flow(g, i, h))[0]
            minus = adjoint(left_invariant_flow(g, i, -h))[0]
            dl = (plus - minus) / (2 * h)
            worst = max(worst, np.max(np.abs(dl + eps[i] @ l)))
        deriv[s] = worst
    return [_result("group_orthogonality", ortho), _result("group_derivative", deriv)]


def check_profile_ode(f: FocalTriple, lam_start: float | None = None,
                      lam_end: float | None = None) -> CheckResult:
    """Integrate ``dA/deta = BC`` (cyclic) from ``lam_start`` until ``A**2 + lam1 = lam_end``
    and compare with the closed-form profile."""
    lam_start = f.lam3 + 1.0 if lam_start is None else lam_start
    lam_end = lam_start + 4.0 if lam_end is None else lam_end

    def reached(_eta, y):
        return y[0] ** 2 + f.lam1 - lam_end

    reached.terminal = True
    sol = solve_ivp(lambda _eta, y: euler_rhs(y), (0.0, 10.0), list(profile(lam_start, f)),
                    method="DOP853", rtol=1e-13, atol=1e-13, events=reached)
    if sol.status != 1:
        return CheckResult("profile_ode", np.inf, TOLERANCES["profile_ode"], 1)
    y_end = sol.y_events[0][0]
    return _result("profile_ode", np.max(np.abs(y_end - np.array(profile(lam_end, f)))))


def check_potential_equivalence(f: FocalTriple, n: int, rng: np.random.Generator) -> CheckResult:
    """``1/g(R1, R1)`` on the orbit against ``V`` at its moment-map image."""
    res = np.empty(n)
    for s in range(n):
        lam = f.lam3 + 10.0 * (1.0 - rng.uniform())
        g = GroupPoint.random(rng)
        V_orbit = 1.0 / right_norm(lam, g, f)
        V = potential_cartesian(moment_map(lam, g, f), f)
        res[s] = abs(V_orbit - V) / V
    return _result("potential_equivalence", res)


# --- coordinates --------------------------------------------------------------


def check_coordinates(f: FocalTriple, n: int, rng: np.random.Generator) -> list[CheckResult]:
    """Quadric identity, round trip, ``J^T J = diag(h**2)``, route equivalence and the
    Stackel decomposition over ``n`` interior points."""
    quad, trip, metric, route, stk = (np.empty(n) for _ in range(5))
    for s, p in enumerate(random_interior_points(f, n, rng)):
        c = to_cartesian(p, f)
        quad[s] = abs(quadric_residual(c, p.lam, f))
        back = from_cartesian(c, f)
        trip[s] = np.max(np.abs(back.coords - p.coords)) / f.spread
        if back.signs != p.signs:
            trip[s] = np.inf
        J = jacobian(p, f)
        h2 = np.array(scale_factors(p, f)) ** 2
        metric[s] = np.max(np.abs(J.T @ J - np.diag(h2))) / np.max(h2)
        V = potential(p, f)
        route[s] = abs(potential_cartesian(c, f) - V) / V
        stk[s] = abs(staeckel_decomposition(p, f)) / V
    return [
        _result("quadric_identity", quad),
        _result("round_trip", trip),
        _result("metric_consistency", metric),
        _result("route_equivalence", route),
        _result("staeckel", stk),
    ]


# --- fields -------------------------------------------------------------------


def check_fields(f: FocalTriple, n: int, seed: int, h: float = 1e-3) -> list[CheckResult]:
    flat = f.lam1 == f.lam3
    report = field_checks(f, n_samples=n, seed=seed, h=h)
    out = [_result("harmonicity_flat" if flat else "harmonicity", report.laplacian)]
    if report.curl is not None:
        out.append(_result("field_equation", report.curl, curl_sign=int(report.curl_sign)))
    return out


def check_special(f: FocalTriple, n: int, seed: int) -> list[CheckResult]:
    """Closed-form oracles for degenerate triples (none for a strict triple)."""
    rng = np.random.default_rng(seed)
    pts = sample_points(f, n, rng)
    if f.lam1 == f.lam3:
        res = [abs(potential_cartesian(c, f) * np.linalg.norm(c) - 1.0) for c in pts]
        return [_result("flat_potential", res)]
    if f.lam2 == f.lam3:
        res = []
        for c in pts:
            exact = special_potential("eguchi_hanson", c, f)
            res.append(abs(potential_cartesian(c, f) - exact) / exact)
        return [_result("eguchi_hanson", res)]
    if f.lam1 == f.lam2:
        d = f.lam3 - f.lam1
        res = []
        for z in pts[:, 2]:
            exact = abs(z) / (z * z + d)
            res.append(abs(potential_cartesian([0.0, 0.0, z], f) - exact) / exact)
        return [_result("axis_closed_form", res)]
    return []


# --- dynamics -----------------------------------------------------------------


def on_shell_state(x, direction, f: FocalTriple, e: float = 0.0) -> ReducedState:
    """The state at ``x`` with kinetic momentum along ``direction`` and ``H = 1/2``."""
    x = np.asarray(x, dtype=float)
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    V = potential_cartesian(x, f)
    k2 = V * (1.0 - e * e * V)
    if k2 < 0:
        raise ValueError(f"no unit-speed state at {x.tolist()} with e={e} (e**2 V > 1)")
    p = np.sqrt(k2) * n
    if e != 0.0:
        p = p + e * connection_cartesian(x, f)
    return ReducedState(x, p, e)


def random_shell_states(f: FocalTriple, n: int, rng: np.random.Generator, e: float = 0.0,
                        guard: float = 0.05) -> list[ReducedState]:
    out = []
    while len(out) < n:
        x = sample_points(f, 1, rng)[0]
        if guard_zone(x, f, e, 2 * guard) <= 0:
            continue
        try:
            out.append(on_shell_state(x, rng.normal(size=3), f, e))
        except ValueError:
            continue
    return out


def trajectory_drifts(traj) -> dict:
    """Drift of ``H`` and of ``(a, b)`` (normalised by ``1 + |a0|``, ``1 + |b0|``),
    and the largest collinearity residual along a trajectory."""
    H = traj.H
    out = {"energy": float(np.max(np.abs(H - H[0])))}
    if traj.e == 0.0:
        a, b = traj.a, traj.b
        da = np.nanmax(np.abs(a - a[0])) / (1 + abs(a[0]))
        db = np.nanmax(np.abs(b - b[0])) / (1 + abs(b[0]))
        out["separation"] = float(max(da, db))
        out["collinearity"] = float(np.nanmax(traj.residual))
    return out


def check_geodesics(f: FocalTriple, rng: np.random.Generator, n_neutral: int = 3,
                    n_charged: int = 2, T: float = 10.0, tol: float = 1e-10,
                    e: float = 0.3) -> list[CheckResult]:
    energy, sep, col, charged = [], [], [], []
    statuses = []
    for s0 in random_shell_states(f, n_neutral, rng):
        traj = integrate(s0, f, T, tol=tol)
        d = trajectory_drifts(traj)
        energy.append(d["energy"])
        sep.append(d["separation"])
        col.append(d["collinearity"])
        statuses.append(traj.status)
    for s0 in random_shell_states(f, n_charged, rng, e=e):
        traj = integrate(s0, f, T, tol=tol)
        charged.append(trajectory_drifts(traj)["energy"])
        statuses.append(traj.status)
    guard_stops = statuses.count("guard")
    return [
        _result("energy_drift", energy, guard_stops=guard_stops),
        _result("separation_drift", sep),
        _result("collinearity", col),
        _result("charged_energy_drift", charged, charge=e),
    ]


def shell_value(s: ReducedState, f: FocalTriple) -> float:
    """``e**2 V + |p - e omega|**2 / V``, which is 1 on the unit-speed shell."""
    return 2.0 * hamiltonian(s, f)


# --- waves --------------------------------------------------------------------


def default_wave_box(f: FocalTriple):
    """An interior ellipsoidal box: centre and half-widths on each branch."""
    centre = EllipsoidalPoint(f.lam3 + 0.25 * f.spread, 0.5 * (f.lam2 + f.lam3),
                              0.5 * (f.lam1 + f.lam2))
    half = (0.1 * f.spread, 0.1 * (f.lam3 - f.lam2), 0.1 * (f.lam2 - f.lam1))
    return centre, half


def check_waves(f: FocalTriple, rng: np.random.Generator, n_triples: int = 1,
                n_points: int = 50, h: float = 1e-3, centre=None, half_widths=None,
                offset: float = 0.1) -> list[CheckResult]:
    """PDE residual of product solutions for random ``(E, a, b)``, and the residual
    increase when ``a`` is offset on the ``mu`` branch alone."""
    if centre is None:
        centre, half_widths = default_wave_box(f)
    resid, gain = [], []
    for _ in range(n_triples):
        E = rng.uniform(0.5, 2.0)
        a, b = rng.uniform(-1.0, 1.0, 2)
        pts = box_points(centre, half_widths, n_points, f, rng)
        r = pde_residual(E, a, b, f, pts, h=h)
        r_off = pde_residual(E, a, b, f, pts, h=h, perturb={"mu": (offset, 0.0)})
        resid.append(r)
        # Positive when the offset run is not strictly worse.
        gain.append(r - r_off)
    return [_result("wave_residual", resid), _result("wave_sensitivity", gain)]

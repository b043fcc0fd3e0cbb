"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they
are also written through ``capsys.disabled()`` so plain ``-v`` shows them.
"""
import subprocess
import sys

import numpy as np
import pytest

from confocal_instanton import checks
from confocal_instanton.confocal import EllipsoidalPoint, FocalTriple, to_cartesian
from confocal_instanton.dynamics import (
    ReducedState,
    hamiltonian,
    integrate,
    momentum_from_separation,
    separation_line,
)
from confocal_instanton.errors import DomainError
from confocal_instanton.field import field_checks

F = FocalTriple(0.0, 1.0, 4.0)


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")


def test_criterion_01_harmonicity(capsys):
    rep = field_checks(F, n_samples=100, seed=7, h=1e-3)
    worst = float(np.max(rep.laplacian))
    ok = len(rep.laplacian) == 100 and worst <= 1e-4
    report(capsys, 1, "harmonicity", ok, f"max normalised laplacian {worst:.2e} <= 1e-4")
    assert ok


def test_criterion_02_field_equation(capsys):
    rep = field_checks(F, n_samples=100, seed=7, h=1e-3)
    worst = float(np.max(rep.curl))
    ok = worst <= 1e-4 and rep.curl_sign in (1, -1)
    report(capsys, 2, "curl omega = s grad V", ok,
           f"max relative residual {worst:.2e} <= 1e-4, sign {rep.curl_sign:+d}")
    assert ok


def test_criterion_03_potential_equivalence(capsys):
    res = checks.check_potential_equivalence(F, 1000, np.random.default_rng(3))
    ok = res.samples == 1000 and res.passed and res.tolerance == 1e-8
    report(capsys, 3, "group-norm vs moment-map potential", ok,
           f"max relative error {res.max_residual:.2e} <= 1e-8 over {res.samples}")
    assert ok


def test_criterion_04_quadric_and_round_trip(capsys):
    found = {r.name: r for r in checks.check_coordinates(F, 1000, np.random.default_rng(4))}
    quad, trip = found["quadric_identity"], found["round_trip"]
    ok = quad.passed and trip.passed and quad.samples >= 1000 and trip.samples >= 1000
    report(capsys, 4, "quadric identity and round trip", ok,
           f"quadric {quad.max_residual:.2e} <= 1e-10, round trip {trip.max_residual:.2e} <= 1e-8")
    assert ok


def test_criterion_05_special_cases(capsys):
    flat = checks.check_special(FocalTriple(0.0, 0.0, 0.0), 100, seed=5)[0]
    eh = checks.check_special(FocalTriple(0.0, 4.0, 4.0), 100, seed=5)[0]
    ok = (flat.name == "flat_potential" and flat.max_residual <= 1e-10
          and eh.name == "eguchi_hanson" and eh.samples == 100 and eh.max_residual <= 1e-6)
    report(capsys, 5, "flat and Eguchi-Hanson limits", ok,
           f"|V r - 1| {flat.max_residual:.2e} <= 1e-10, EH relative {eh.max_residual:.2e} <= 1e-6")
    assert ok


def _constructive_inverse_error(rng, n=60):
    worst = 0.0
    done = 0
    while done < n:
        pt = EllipsoidalPoint(4 + rng.uniform(0.5, 6), rng.uniform(1.2, 3.8),
                              rng.uniform(0.1, 0.9), tuple(rng.choice([-1, 1], 3)))
        a = -rng.uniform(0.1, 2.0)
        b = -a * rng.uniform(pt.nu, pt.mu)
        try:
            p = momentum_from_separation(pt, a, b, F, tuple(rng.choice([-1, 1], 3)))
        except DomainError:
            continue
        (a2, b2), _ = separation_line(to_cartesian(pt, F), p, F)
        worst = max(worst, abs(a2 - a), abs(b2 - b))
        done += 1
    return worst


def test_criterion_06_hamilton_jacobi_separation(capsys):
    rng = np.random.default_rng(6)
    drifts = []
    for s0 in checks.random_shell_states(F, 3, rng):
        assert hamiltonian(s0, F) == pytest.approx(0.5, rel=1e-12)
        drifts.append(checks.trajectory_drifts(integrate(s0, F, 10.0, tol=1e-10)))
    energy = max(d["energy"] for d in drifts)
    sep = max(d["separation"] for d in drifts)
    col = max(d["collinearity"] for d in drifts)
    inverse = _constructive_inverse_error(rng)
    ok = energy <= 1e-8 and sep <= 1e-6 and col <= 1e-8 and inverse <= 1e-10
    report(capsys, 6, "separation constants at e=0", ok,
           f"H drift {energy:.2e} <= 1e-8, (a,b) drift {sep:.2e} <= 1e-6, "
           f"collinearity {col:.2e} <= 1e-8, inverse {inverse:.2e} <= 1e-10")
    assert ok


def test_criterion_07_charged_energy(capsys):
    rng = np.random.default_rng(7)
    drifts = []
    for s0 in checks.random_shell_states(F, 3, rng, e=0.3):
        assert isinstance(s0, ReducedState) and s0.e == 0.3
        drifts.append(checks.trajectory_drifts(integrate(s0, F, 10.0, tol=1e-10))["energy"])
    worst = max(drifts)
    ok = worst <= 1e-8
    report(capsys, 7, "energy conservation at e=0.3", ok, f"H drift {worst:.2e} <= 1e-8")
    assert ok


def test_criterion_08_schroedinger_separation(capsys):
    resid, gain = checks.check_waves(F, np.random.default_rng(8), n_triples=3, n_points=50,
                                     h=1e-3)
    # gain = r - r_offset, negative when the offset strictly raises the residual.
    ok = resid.samples == 3 and resid.max_residual <= 1e-3 and gain.max_residual < 0
    report(capsys, 8, "separated wave products", ok,
           f"max PDE residual {resid.max_residual:.2e} <= 1e-3, "
           f"offset raises residual in all {gain.samples} runs")
    assert ok


def test_criterion_09_group_and_profile(capsys):
    ortho, deriv = checks.check_group(1000, np.random.default_rng(9))
    prof = checks.check_profile_ode(F)
    ok = ortho.max_residual <= 1e-12 and deriv.max_residual <= 1e-6 and prof.max_residual <= 1e-8
    report(capsys, 9, "group and profile identities", ok,
           f"orthonormality {ortho.max_residual:.2e} <= 1e-12, derivative "
           f"{deriv.max_residual:.2e} <= 1e-6, profile ODE {prof.max_residual:.2e} <= 1e-8")
    assert ok


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "confocal_instanton", *argv],
                          capture_output=True, text=True, timeout=300)


def test_criterion_10_cli_determinism(capsys):
    first, second = _cli("verify", "--seed", "7"), _cli("verify", "--seed", "7")
    same = first.stdout == second.stdout and len(first.stdout) > 0
    failed = _cli("verify", "--h", "0.3", "--samples", "10")
    bad = _cli("verify", "--lambdas", "4,1,0")
    codes = (first.returncode, failed.returncode, bad.returncode)
    ok = same and codes == (0, 1, 2)
    report(capsys, 10, "CLI determinism and exit codes", ok,
           f"identical reports {same}, exit codes pass/fail/config {codes} == (0, 1, 2)")
    assert ok

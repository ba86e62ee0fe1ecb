"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run as ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines with the measured statistics and timings.  Every tolerance is pinned
here; nothing is deferred to later calibration.
"""

import math
import time

import numpy as np
import pytest

import dhymgeo as dg
from dhymgeo.angles import (
    classify_singular,
    phi_lifted_usc_batch,
    phi_regular,
    theta_batch,
)
from dhymgeo.geodesic import T_TOTAL, build_barriers, interior_jets, strictify
from dhymgeo.subequations import sample_hermitian

PI = math.pi


def report(num, name, passed, stats, elapsed):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {num:2d} {name}: {status} ({stats}, t={elapsed:.2f}s)")
    assert passed, f"criterion {num} ({name}) failed: {stats}"


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_duality_identity():
    with Timer() as tm:
        worst = 0.0
        forced = 0
        for n, seed in ((1, 101), (2, 102)):
            rep = dg.duality_fuzz(n, 5000, seed=seed, tol=1e-9, forced_singular=100)
            worst = max(worst, rep.worst)
            forced += rep.details["forced_singular"]
            assert rep.violations == 0
    passed = worst <= 1e-9 and forced >= 100 and tm.elapsed < 10.0
    report(1, "duality identity", passed, f"max_err={worst:.3e}, forced_S={forced}", tm.elapsed)


def test_criterion_2_positivity():
    with Timer() as tm:
        worst = math.inf
        total = 0
        for spec, seed in (
            (dg.SubeqSpec(space="spacetime", branch=dg.Branch(c=PI / 4, n=1)), 201),
            (dg.SubeqSpec(space="spacetime", branch=dg.Branch(c=0.75 * PI, n=2)), 202),
            (dg.dual_of(dg.SubeqSpec(space="spacetime", branch=dg.Branch(c=PI / 4, n=1))), 203),
            (dg.SubeqSpec(space="spatial", branch=dg.Branch(c=0.8, n=2)), 204),
        ):
            rep = dg.positivity_fuzz(spec, 2500, seed=seed, tol=1e-10)
            total += rep.trials
            worst = min(worst, rep.worst)
            assert rep.violations == 0, spec.kind
    passed = total == 10000 and worst >= -1e-10 and tm.elapsed < 10.0
    report(2, "positivity", passed, f"trials={total}, min_increase={worst:.3e}", tm.elapsed)


def test_criterion_3_convexity():
    with Timer() as tm:
        worst = math.inf
        for c, n, seed in (
            (0.3 * PI / 2, 1, 301),
            (0.7 * PI / 2, 1, 302),
            (0.6 * PI, 2, 303),
            (0.9 * PI, 2, 304),
        ):
            rep = dg.convexity_fuzz(dg.Branch(c=c, n=n), 10000, seed=seed, gap_tol=1e-8)
            worst = min(worst, rep.worst)
            assert rep.violations == 0, f"c={c}, n={n}"
        neg = dg.convexity_fuzz(
            dg.Branch(c=-0.75 * PI, n=2), 10000, seed=305, allow_out_of_regime=True
        )
    passed = worst >= -1e-8 and neg.violations >= 1 and tm.elapsed < 60.0
    report(
        3,
        "convexity + negative control",
        passed,
        f"worst_gap={worst:.3e}, control_violations={neg.violations}",
        tm.elapsed,
    )


def test_criterion_4_bordered_det_and_spectrum():
    rng = np.random.default_rng(401)
    with Timer() as tm:
        worst_rel = 0.0
        min_re_all = math.inf
        min_re_strict = math.inf
        for k in range(10000):
            n = int(rng.integers(1, 4))
            A = sample_hermitian(rng, n + 1, 1)[0]
            eta = 0.0 if k % 2 == 0 else float(abs(rng.standard_normal()))
            a11 = float(A[0, 0].real)
            a1 = A[1:, 0]
            B_plus = np.eye(n) + 1j * A[1:, 1:]
            lhs = dg.bordered_det(B_plus, a11, a1, eta)
            rhs = np.linalg.det(dg.bordered_matrix(B_plus, a11, a1, eta))
            worst_rel = max(worst_rel, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30))
            mre = dg.realpart_spectrum_check(A, eta)
            min_re_all = min(min_re_all, mre)
            if eta > 0 or np.linalg.norm(a1) > 1e-6:
                min_re_strict = min(min_re_strict, mre)
    passed = (
        worst_rel <= 1e-12
        and min_re_all >= -1e-12
        and min_re_strict > 0.0
        and tm.elapsed < 10.0
    )
    report(
        4,
        "bordered determinant + spectrum",
        passed,
        f"rel_err={worst_rel:.3e}, min_Re={min_re_all:.3e}, min_Re_strict={min_re_strict:.3e}",
        tm.elapsed,
    )


def test_criterion_5_eta_squeeze():
    rng = np.random.default_rng(501)
    etas = (10.0, 1e2, 1e3, 1e4)
    with Timer() as tm:
        checked = 0
        worst_final = 0.0
        while checked < 100:
            n = int(rng.integers(1, 3))
            A = sample_hermitian(rng, n + 1, 1, scales=(1.0,))[0]
            if classify_singular(A).in_S:
                continue
            target = phi_regular(A)
            errs = [abs(dg.eta_squeeze(A, eta) - target) for eta in etas]
            assert all(b <= a + 1e-12 for a, b in zip(errs, errs[1:])), errs
            worst_final = max(worst_final, errs[-1])
            checked += 1
    passed = worst_final < 1e-5 and tm.elapsed < 10.0
    report(5, "eta squeeze", passed, f"samples={checked}, worst@1e4={worst_final:.3e}", tm.elapsed)


def test_criterion_6_slice_gap():
    rng = np.random.default_rng(601)
    with Timer() as tm:
        worst = 0.0
        for n in (1, 2):
            A = sample_hermitian(rng, n + 1, 50000)
            usc, _ = phi_lifted_usc_batch(A)
            gap = usc - theta_batch(A[:, 1:, 1:])
            worst = max(worst, float(np.max(np.abs(gap))))
    passed = worst <= PI / 2 + 1e-10 and tm.elapsed < 10.0
    report(6, "slice angle gap", passed, f"max|gap|={worst:.12f} (pi/2={PI / 2:.12f})", tm.elapsed)


def test_criterion_7_dimension_one_equivalence():
    rng = np.random.default_rng(701)
    with Timer() as tm:
        udd = rng.standard_normal(10000)
        b = rng.standard_normal(10000) + 1j * rng.standard_normal(10000)
        lam = rng.standard_normal(10000)
        c = rng.uniform(0.05, PI / 2 - 0.05, size=10000)
        dets = 1j * udd * (1.0 + 1j * lam) + np.abs(b) ** 2
        det_form = np.imag(np.exp(-1j * c) * dets)
        expansion = udd * (np.cos(c) + lam * np.sin(c)) - np.abs(b) ** 2 * np.sin(c)
        worst = float(np.max(np.abs(det_form - expansion) / (1.0 + np.abs(expansion))))
        # spot-check the same identity through the jet-level API
        for k in range(0, 10000, 500):
            jet = dg.SpaceTimeJet(
                udotdot=float(udd[k]),
                b=np.array([b[k]]),
                spatial=np.array([[lam[k] + 0j]]),
            )
            _, df = dg.harmonic_residual(jet, float(c[k]))
            assert abs(df - expansion[k]) <= 1e-12 * (1 + abs(expansion[k]))
    passed = worst <= 1e-12 and tm.elapsed < 5.0
    report(7, "n=1 residual equivalence", passed, f"max_rel_err={worst:.3e}", tm.elapsed)


def _shift_problem(nt, nx):
    geom = dg.TorusGeometry(n=1, grid=(nx,), alpha0=[[3.0]], reduced=True)
    x = geom.coordinates()["x1"]
    phi = 0.3 * np.cos(2 * PI * x)
    branch = dg.select_branch(geom, require_regime=True)
    return dg.GeodesicProblem(
        geom=geom,
        phi1=phi,
        phi2=phi + 0.2,
        branch=branch,
        nt=nt,
        sweep_tol=1e-13,
        max_iters=60000,
        mode="jacobi",
        check_two_init=False,
    )


def test_criterion_8_geodesic_exactness():
    with Timer() as tm:
        errs = []
        for nt, nx in ((33, 64), (65, 128)):
            pb = _shift_problem(nt, nx)
            U, rep = dg.solve(pb)
            exact = pb.phi1 + 0.2 * pb.t_grid.reshape(-1, 1) / T_TOTAL
            errs.append(float(np.max(np.abs(U - exact))))
            assert rep.converged
    # both grids reproduce the closed form at the solver-tolerance floor;
    # the refinement order is asserted whenever the error is above it
    floor = 1e-8
    if errs[0] > floor and errs[1] > floor:
        order_ok = math.log2(errs[0] / errs[1]) >= 1.9
    else:
        order_ok = max(errs) <= floor
    passed = errs[0] <= 5e-4 and order_ok and tm.elapsed < 120.0
    report(
        8,
        "geodesic exactness",
        passed,
        f"err33x64={errs[0]:.3e}, err65x128={errs[1]:.3e}",
        tm.elapsed,
    )


@pytest.fixture(scope="module")
def generic_problem_solution():
    geom = dg.TorusGeometry(n=1, grid=(32, 32), alpha0=[[3.0]])
    co = geom.coordinates()
    phi1 = 0.2 * np.cos(2 * PI * co["x1"]) + 0.05 * np.sin(2 * PI * co["y1"])
    phi2 = 0.15 * np.sin(2 * PI * co["x1"]) * np.cos(2 * PI * co["y1"]) + 0.1
    branch = dg.select_branch(geom, require_regime=True)
    pb = dg.GeodesicProblem(
        geom=geom,
        phi1=phi1,
        phi2=phi2,
        branch=branch,
        nt=33,
        sweep_tol=1e-14,
        max_iters=40000,
        mode="jacobi",
        check_two_init=True,
    )
    t0 = time.perf_counter()
    U, rep = dg.solve(pb)
    return pb, U, rep, time.perf_counter() - t0


def test_criterion_9_validation_battery(generic_problem_solution):
    pb, U, rep, elapsed = generic_problem_solution
    slice_tol = 1e-3
    lo = min(r[0] for r in rep.slice_ranges)
    hi = max(r[1] for r in rep.slice_ranges)
    band_ok = (lo >= pb.branch.c - PI / 2 - slice_tol) and (
        hi <= pb.branch.c + PI / 2 + slice_tol
    )
    passed = (
        min(pb.margins) >= 0.2
        and rep.converged
        and rep.sandwich_low_worst >= -1e-9
        and rep.sandwich_high_worst >= -1e-9
        and band_ok
        and rep.residual_regular_max <= 1e-6
        and rep.two_init_discrepancy <= 1e-6
        and elapsed < 600.0
    )
    report(
        9,
        "geodesic validation battery",
        passed,
        f"residual={rep.residual_regular_max:.3e}, two_init={rep.two_init_discrepancy:.3e}, "
        f"sandwich=({rep.sandwich_low_worst:.2e},{rep.sandwich_high_worst:.2e}), "
        f"margins=({pb.margins[0]:.2f},{pb.margins[1]:.2f})",
        elapsed,
    )


def test_criterion_10_barrier_strictness(generic_problem_solution):
    pb, U, rep, _ = generic_problem_solution
    with Timer() as tm:
        bars = build_barriers(pb)
        spec = dg.SubeqSpec(space="spacetime", branch=pb.branch)
        tau0 = 1e-3
        eye = np.eye(pb.geom.n + 1)
        min_cert = math.inf
        grids = {"u1": bars.u1}
        for which in ("lower-1", "lower-2"):
            grids[which] = strictify(U, 0.1, which, bars)
        for name, W in grids.items():
            H, _ = interior_jets(pb, W)
            vals, _ = phi_lifted_usc_batch(H - tau0 * eye)
            min_cert = min(min_cert, float(np.min(vals)) - pb.branch.c)
            assert np.all(vals >= pb.branch.c), f"{name}: margin below {tau0}"
        # exercise the bisection margin on scattered points
        H1, _ = interior_jets(pb, bars.u1)
        sampled = []
        for k in range(0, H1.shape[0], H1.shape[0] // 40):
            m = dg.strict_margin(spec, H1[k])
            assert m is not None and m > 0
            sampled.append(m)
    passed = min_cert >= 0.0 and min(sampled) > tau0
    report(
        10,
        "barrier strictness",
        passed,
        f"certified_margin>={tau0}, sampled_min={min(sampled):.3e}",
        tm.elapsed,
    )

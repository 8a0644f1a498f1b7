"""End-to-end acceptance criteria; each test logs one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest
import scipy.linalg as sla

from pairspec.bracketing import bracketing_counts, build_bracket_pair, minmax_domination
from pairspec.eigensolve import count_below, lowest_eigenpairs
from pairspec.femassembly import build_system, reduce_to_sector
from pairspec.geometry import PairParameters, make_domain
from pairspec.reference import square_neumann_spectrum
from pairspec.report import extrapolate, solve_domain

PI2 = math.pi**2
D, L, H = 1.0, 8.0, 1 / 32
DELTA = 0.02


@pytest.fixture(scope="module")
def pair_solves():
    return {s: solve_domain("pair", s, D, L, H, k=6) for s in ("full", "symmetric", "antisymmetric")}


@pytest.fixture(scope="module")
def cross_solves():
    return {
        "d": solve_domain("cross-diag", "full", D, L, H, k=6),
        "d/2": solve_domain("cross-diag", "full", D, L, H, k=6, scale=0.5),
        "axis": solve_domain("cross-axis", "full", D, L, H, k=6),
    }


def test_criterion_1_square_closed_form(acceptance_log):
    t0 = time.perf_counter()
    spacings, values = [], []
    for h in (1 / 16, 1 / 32, 1 / 64):
        S = build_system(make_domain("square", PairParameters(D, L, h)))
        spacings.append(S.mesh.spacing)
        values.append(lowest_eigenpairs(S.stiffness, S.mass, 6).eigenvalues)
    values = np.array(values)
    exact = np.array(square_neumann_spectrum(D, 6))
    fine = values[-1]
    zero_ok = abs(fine[0]) < 1e-8
    rel = np.abs(fine[1:] - exact[1:]) / exact[1:]
    orders = [extrapolate(values[:, j], spacings).order for j in range(1, 6)]
    elapsed = time.perf_counter() - t0
    ok = zero_ok and rel.max() <= 5e-3 and all(o is not None and abs(o - 2) <= 0.2 for o in orders)
    acceptance_log("1 square closed form", ok,
                   f"max rel err {rel.max():.2e}, orders {[round(o, 3) for o in orders]}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_cross_axis_single_eigenvalue(cross_solves, acceptance_log):
    rec, system, res = cross_solves["axis"]
    thr = rec["threshold"]
    n = count_below(system.stiffness, system.mass, (1 - DELTA) * thr)
    lam2 = rec["eigenvalues"][1]
    ok = n == 1 and lam2 >= (1 - DELTA) * thr
    acceptance_log("2 cross-axis exactly one eigenvalue", ok,
                   f"w_h={rec['snapped_width']}, threshold {thr:.5f}, count {n}, lambda2 {lam2:.5f}")
    assert ok


def test_criterion_3_one_eigenvalue_per_sector(pair_solves, acceptance_log):
    details, ok = [], True
    for sector, (rec, system, _) in pair_solves.items():
        thr = rec["threshold"]
        lam = rec["eigenvalues"]
        n = count_below(system.stiffness, system.mass, (1 - DELTA) * thr)
        good = n == 1 and lam[1] - lam[0] >= 1e-3 * thr
        ok &= good
        details.append(f"{sector}: count {n}, lambda1 {lam[0]:.5f}, lambda2 {lam[1]:.5f}, thr {thr:.5f}")
    acceptance_log("3 pair domain one eigenvalue per sector", ok, "; ".join(details))
    assert ok


def test_criterion_4_bracketing(cross_solves, acceptance_log):
    rec, axis, _ = cross_solves["axis"]
    square, arms = build_bracket_pair(D, L, H)
    grid = rec["threshold"] * np.arange(1, 21) / 21
    rows = bracketing_counts(axis, square, arms, grid)
    holds = all(r["cross"] <= r["square"] + r["arms"] for r in rows)
    arms_empty = all(r["arms"] == 0 for r in rows)
    ok = holds and arms_empty
    acceptance_log("4 discrete bracketing", ok,
                   f"{len(rows)} energies, max cross count {max(r['cross'] for r in rows)}, arms empty {arms_empty}")
    assert ok


def test_criterion_5_minmax_domination(pair_solves, cross_solves, acceptance_log):
    details, ok = [], True
    for sector, target in (("full", "d"), ("symmetric", "d"), ("antisymmetric", "d/2")):
        _, _, pres = pair_solves[sector]
        _, _, cres = cross_solves[target]
        slack = 1e-6 + max(pres.residuals[:5].max(), cres.residuals[:5].max())
        flags = minmax_domination(pres.eigenvalues[:5], cres.eigenvalues[:5], slack)
        ok &= all(flags)
        margin = np.min(pres.eigenvalues[:5] - cres.eigenvalues[:5])
        details.append(f"{sector} vs cross({target}): min margin {margin:.3e}")
    acceptance_log("5 min-max domination", ok, "; ".join(details))
    assert ok


def test_criterion_6_exchange_split(acceptance_log):
    full = build_system(make_domain("pair", PairParameters(1.0, 4.0, 1 / 8)))
    parts = [reduce_to_sector(full, s) for s in ("symmetric", "antisymmetric")]
    eig = lambda S: sla.eigh(S.stiffness.toarray(), S.mass.toarray(), eigvals_only=True)  # noqa: E731
    lam = eig(full)
    merged = np.sort(np.concatenate([eig(S) for S in parts]))
    ok = full.dim < 2000 and len(merged) == len(lam) and np.allclose(merged, lam, rtol=1e-9, atol=0)
    err = np.max(np.abs(merged - lam) / lam) if len(merged) == len(lam) else np.inf
    acceptance_log("6 exchange split exactness", ok, f"dim {full.dim}, max rel diff {err:.2e}")
    assert ok


def test_criterion_7_inertia_oracle(acceptance_log):
    rng = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(5, 201))
        X = rng.standard_normal((n, n))
        A = (X + X.T) / 2
        Y = rng.standard_normal((n, n))
        B = Y @ Y.T + n * np.eye(n)
        lam = sla.eigh(A, B, eigvals_only=True)
        E = rng.uniform(lam[0], lam[-1])
        mismatches += count_below(A, B, E) != np.sum(lam < E)
    ok = mismatches == 0
    acceptance_log("7 inertia oracle", ok, f"{mismatches} mismatches in 100 random pairs")
    assert ok


def test_criterion_8_properties(acceptance_log):
    lam1 = lambda s, d, L_, h: solve_domain("pair", s, d, L_, h, k=2)[0]["eigenvalues"][0]  # noqa: E731
    sectors = ("full", "symmetric", "antisymmetric")
    h_mono = all(np.all(np.diff([lam1(s, 1.0, 8.0, h) for h in (1 / 8, 1 / 16, 1 / 32)]) <= 1e-10)
                 for s in sectors)
    L_mono = all(np.all(np.diff([lam1(s, 1.0, L_, 1 / 16) for L_ in (4.0, 8.0, 16.0)]) <= 1e-10)
                 for s in sectors)
    worst = 0.0
    for s in sectors:
        one = np.array(solve_domain("pair", s, 1.0, 4.0, 1 / 16, k=4)[0]["eigenvalues"])
        two = np.array(solve_domain("pair", s, 2.0, 8.0, 2 / 16, k=4)[0]["eigenvalues"])
        worst = max(worst, np.max(np.abs(4 * two - one) / one))
    la = lam1("antisymmetric", D, L, H)
    anti = la >= (1 - DELTA) * PI2 / (2 * D**2)
    ok = h_mono and L_mono and worst <= 1e-6 and anti
    acceptance_log("8 property suite", ok,
                   f"h-monotone {h_mono}, L-monotone {L_mono}, dilation rel err {worst:.1e}, "
                   f"lambda1(a)={la:.4f}")
    assert ok

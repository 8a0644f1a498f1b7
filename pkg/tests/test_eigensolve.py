import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from pairspec.eigensolve import (
    EigenSolveError,
    ThresholdBoundaryError,
    count_below,
    count_below_perturbed,
    lowest_eigenpairs,
    rayleigh_quotient,
)

from conftest import system_for

PI2 = math.pi**2


def random_pair(rng, n):
    X = rng.standard_normal((n, n))
    A = (X + X.T) / 2
    Y = rng.standard_normal((n, n))
    B = Y @ Y.T + n * np.eye(n)
    return A, B


def oracle_count(A, B, E):
    return int(np.sum(sla.eigh(A, B, eigvals_only=True) < E))


def test_count_diagonal():
    assert count_below(np.diag([1.0, 2.0, 3.0]), np.eye(3), 2.5) == 2


@pytest.mark.parametrize("kind,sector", [("pair", "full"), ("pair", "antisymmetric"), ("cross-axis", "full")])
def test_count_at_zero_is_zero(kind, sector):
    S = system_for(kind, h=0.25, sector=sector)
    assert count_below(S.stiffness, S.mass, 0.0) == 0


def test_count_at_exact_eigenvalue_flags_boundary():
    S = system_for("square", h=0.25)
    with pytest.raises(ThresholdBoundaryError):
        count_below(S.stiffness, S.mass, 0.0)
    assert count_below_perturbed(S.stiffness, S.mass, 0.0) == 0
    with pytest.raises(ThresholdBoundaryError):
        count_below(np.diag([1.0, 2.0, 3.0]), np.eye(3), 2.0)
    assert count_below_perturbed(np.diag([1.0, 2.0, 3.0]), np.eye(3), 2.0) == 1


def test_count_random_dense_pairs():
    rng = np.random.default_rng(1)
    for _ in range(100):
        A, B = random_pair(rng, 50)
        E = rng.uniform(-1.0, 1.0)
        assert count_below(A, B, E) == oracle_count(A, B, E)


@pytest.mark.parametrize("kind,sector,h", [("pair", "symmetric", 0.125), ("cross-diag", "full", 0.25),
                                           ("square", "full", 0.0625)])
def test_sparse_inertia_matches_dense(kind, sector, h):
    S = system_for(kind, h=h, sector=sector)
    assert S.dim > 200
    lam = sla.eigh(S.stiffness.toarray(), S.mass.toarray(), eigvals_only=True)
    mids = (lam[1:60] + lam[:59]) / 2
    for E in mids[np.diff(lam[:60]) > 1e-8]:
        assert count_below(S.stiffness, S.mass, E) == np.sum(lam < E)


def test_sparse_inertia_random_sparse_pairs():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = 300
        X = sparse.random(n, n, density=0.02, random_state=rng)
        A = sparse.csr_matrix((X + X.T) / 2 + sparse.diags(rng.uniform(-1, 1, n)))
        B = sparse.csr_matrix(sparse.diags(rng.uniform(1, 2, n)) + 0.01 * (X @ X.T))
        E = rng.uniform(-0.5, 0.5)
        assert count_below(A, B, E) == oracle_count(A.toarray(), B.toarray(), E)


def test_square_lowest_is_constant_mode():
    S = system_for("square", h=0.125)
    res = lowest_eigenpairs(S.stiffness, S.mass, 3, method="lanczos")
    assert abs(res.eigenvalues[0]) < 1e-10
    v = res.eigenvectors[:, 0]
    assert np.ptp(v / v[0]) < 1e-8


def test_square_second_eigenvalue_fine_mesh():
    S = system_for("square", h=1 / 64)
    res = lowest_eigenpairs(S.stiffness, S.mass, 3)
    assert res.eigenvalues[1] == pytest.approx(PI2 / 2, rel=5e-3)


def test_symmetric_sector_single_bound_state():
    S = system_for("pair", L=8.0, h=1 / 16, sector="symmetric")
    res = lowest_eigenpairs(S.stiffness, S.mass, 2)
    assert res.eigenvalues[0] < PI2 / 2
    assert res.eigenvalues[1] > 0.98 * PI2 / 2


def test_doublet_returns_b_orthonormal_pair():
    S = system_for("square", h=0.125)
    res = lowest_eigenpairs(S.stiffness, S.mass, 4, method="lanczos")
    lam = res.eigenvalues
    assert lam[2] - lam[1] < 1e-8 * lam[1]
    G = res.eigenvectors.T @ S.mass @ res.eigenvectors
    assert np.abs(G - np.eye(4)).max() < 1e-8


@pytest.mark.parametrize("kind,sector", [("pair", "symmetric"), ("pair", "antisymmetric"),
                                         ("cross-axis", "full"), ("arms", "full")])
def test_lanczos_matches_dense_oracle(kind, sector):
    S = system_for(kind, h=0.25, sector=sector)
    k = 6
    res = lowest_eigenpairs(S.stiffness, S.mass, k, method="lanczos", seed=3)
    ref = sla.eigh(S.stiffness.toarray(), S.mass.toarray(), eigvals_only=True, subset_by_index=[0, k - 1])
    assert np.allclose(res.eigenvalues, ref, rtol=1e-8, atol=0)
    assert np.all(res.residuals <= 1e-8)


def test_small_random_systems_against_eigh():
    rng = np.random.default_rng(5)
    for n in (20, 80, 200):
        X = rng.standard_normal((n, n))
        A = X @ X.T
        B = np.eye(n) + 0.1 * np.diag(rng.uniform(size=n))
        res = lowest_eigenpairs(A, B, 5)
        ref = sla.eigh(A, B, eigvals_only=True, subset_by_index=[0, 4])
        assert np.allclose(res.eigenvalues, ref, rtol=1e-8)


def test_counts_consistent_with_eigenpairs():
    S = system_for("pair", h=0.125, sector="symmetric")
    res = lowest_eigenpairs(S.stiffness, S.mass, 6)
    lam = res.eigenvalues
    for j in range(6):
        E = lam[j] + 1e-6
        assert count_below(S.stiffness, S.mass, E) >= j + 1
    grid = np.linspace(0.1, lam[-1] - 1e-3, 25)
    for E in grid:
        if np.min(np.abs(lam - E)) > 1e-6:
            assert count_below(S.stiffness, S.mass, E) == np.sum(lam < E)


def test_nonconvergence_is_explicit():
    S = system_for("cross-diag", h=0.25)
    with pytest.raises(EigenSolveError):
        lowest_eigenpairs(S.stiffness, S.mass, 6, method="lanczos", maxiter=1)
    with pytest.raises(EigenSolveError) as info:
        lowest_eigenpairs(S.stiffness, S.mass, 3, tol=1e-30)
    assert info.value.residuals is not None


def test_bad_arguments():
    A = np.diag([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        lowest_eigenpairs(A, np.eye(3), 3)
    with pytest.raises(ValueError):
        lowest_eigenpairs(A, np.eye(3), 1, tol=0)
    with pytest.raises(ValueError):
        rayleigh_quotient(A, np.eye(3), np.zeros(3))


def test_deterministic_given_seed():
    S = system_for("cross-axis", h=0.125)
    a = lowest_eigenpairs(S.stiffness, S.mass, 4, seed=11)
    b = lowest_eigenpairs(S.stiffness, S.mass, 4, seed=11)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_rayleigh_of_eigenvector_and_constant():
    S = system_for("square", h=0.125)
    res = lowest_eigenpairs(S.stiffness, S.mass, 3)
    v = res.eigenvectors[:, 1]
    assert rayleigh_quotient(S.stiffness, S.mass, v) == pytest.approx(res.eigenvalues[1], rel=1e-10)
    assert abs(rayleigh_quotient(S.stiffness, S.mass, np.ones(S.dim))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_rayleigh_bounded_below_by_ground_state(seed):
    S = system_for("pair", h=0.25, sector="symmetric")
    lam1 = lowest_eigenpairs(S.stiffness, S.mass, 1).eigenvalues[0]
    u = np.random.default_rng(seed).standard_normal(S.dim)
    assert rayleigh_quotient(S.stiffness, S.mass, u) >= lam1 - 1e-8

"""Lowest eigenpairs of ``A u = lam B u`` and inertia-based eigenvalue counts.

Counting uses Sylvester's law of inertia: for symmetric ``A`` and positive
definite ``B`` the number of generalized eigenvalues below ``E`` equals the
number of negative pivots in a symmetric factorization of ``A - E B``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.sparse import linalg as spla

log = logging.getLogger(__name__)

DENSE_LIMIT = 200
_PIVOT_RTOL = 1e-12


class EigenSolveError(RuntimeError):
    """The iteration did not reach the requested residual tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class ThresholdBoundaryError(ArithmeticError):
    """``E`` is numerically an eigenvalue; the caller should perturb it.

    ``count`` holds the (unreliable) inertia count obtained anyway.
    """

    def __init__(self, E, count):
        super().__init__(f"A - E*B is numerically singular at E={E!r}")
        self.E = E
        self.count = count


def _dense(M):
    return M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)


def _dense_inertia(K):
    _, D, _ = sla.ldl(K, lower=True, hermitian=True)
    # D is block diagonal with 1x1 and 2x2 blocks
    n = len(D)
    pivots = []
    i = 0
    while i < n:
        if i + 1 < n and D[i + 1, i] != 0.0:
            pivots.extend(np.linalg.eigvalsh(D[i:i + 2, i:i + 2]))
            i += 2
        else:
            pivots.append(D[i, i])
            i += 1
    return np.asarray(pivots)


def symmetric_splu(K):
    """Sparse LU with symmetric ordering and diagonal pivots only.

    Returns ``None`` when SuperLU had to leave the diagonal, in which case
    ``diag(U)`` is no longer a congruent pivot sequence.
    """
    lu = spla.splu(sparse.csc_matrix(K), permc_spec="MMD_AT_PLUS_A",
                   diag_pivot_thresh=0.0, options=dict(SymmetricMode=True))
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    return lu


def _sparse_inertia(K):
    lu = symmetric_splu(K)
    if lu is None:
        return None
    return lu.U.diagonal()


def inertia_pivots(A, B, E):
    """Pivots whose signs give the inertia of ``A - E*B``."""
    n = A.shape[0]
    if not sparse.issparse(A) or n <= DENSE_LIMIT:
        return _dense_inertia(_dense(A) - E * _dense(B))
    K = (sparse.csr_matrix(A) - E * sparse.csr_matrix(B)).tocsc()
    try:
        piv = _sparse_inertia(K)
    except RuntimeError:  # exactly singular pivot
        piv = None
    if piv is None:
        if n > 5000:
            raise ThresholdBoundaryError(E, -1)
        log.debug("symmetric sparse factorization pivoted; using dense LDL^T")
        piv = _dense_inertia(K.toarray())
    return piv


def count_below(A, B, E: float) -> int:
    """Number of eigenvalues of ``A u = lam B u`` strictly below ``E``.

    Raises :class:`ThresholdBoundaryError` when the factorization of
    ``A - E*B`` is near-singular.
    """
    piv = inertia_pivots(A, B, float(E))
    count = int(np.count_nonzero(piv < 0))
    scale = np.max(np.abs(piv)) if len(piv) else 1.0
    if len(piv) and np.min(np.abs(piv)) <= _PIVOT_RTOL * scale:
        raise ThresholdBoundaryError(E, count)
    return count


def perturbation(A) -> float:
    """Tie-breaking offset ``10 * eps * ||A||``."""
    if sparse.issparse(A):
        norm = sparse.linalg.norm(A, ord=1)
    else:
        norm = np.linalg.norm(A, 1)
    return 10 * np.finfo(float).eps * max(norm, 1.0)


def count_below_perturbed(A, B, E: float, attempts: int = 6) -> int:
    """:func:`count_below`, nudging ``E`` downward when it hits an eigenvalue."""
    step = perturbation(A)
    for i in range(attempts):
        try:
            return count_below(A, B, E - (10**i - 1) * step if i else E)
        except ThresholdBoundaryError:
            continue
    raise ThresholdBoundaryError(E, -1)


def rayleigh_quotient(A, B, u) -> float:
    u = np.asarray(u, dtype=float)
    den = float(u @ (B @ u))
    if not np.any(u) or den <= 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float(u @ (A @ u)) / den


def residual_norms(A, B, lam, vecs):
    Bv = B @ vecs
    R = A @ vecs - Bv * lam
    return np.linalg.norm(R, axis=0) / np.linalg.norm(Bv, axis=0)


@dataclass
class SpectralResult:
    """Lowest eigenpairs with their residual certificates.

    ``eigenvectors`` has one B-orthonormal column per eigenvalue.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    count_thresholds: dict = field(default_factory=dict)
    sigma: float | None = None

    def __len__(self):
        return len(self.eigenvalues)

    def add_count(self, A, B, E) -> int:
        c = count_below_perturbed(A, B, E)
        self.count_thresholds[float(E)] = c
        return c


def _default_shift(A, B) -> float:
    # a crude upper scale for the spectrum; any negative shift keeps A - sigma*B definite
    ratio = np.max(np.abs(A.diagonal()) / np.abs(B.diagonal()))
    return -1e-4 * ratio


def lowest_eigenpairs(A, B, k: int, tol: float = 1e-8, *, seed: int = 0,
                      sigma: float | None = None, maxiter: int | None = None,
                      method: str = "auto") -> SpectralResult:
    """The ``k`` smallest eigenpairs of ``A u = lam B u``.

    Large sparse systems use shift-invert Lanczos about ``sigma`` (a negative
    shift by default, so ``A - sigma*B`` is positive definite); small ones
    are solved densely (``method`` = "dense" / "lanczos" forces either).
    Every returned pair satisfies
    ``||A u - lam B u|| / ||B u|| <= tol`` or :class:`EigenSolveError` is raised.
    """
    n = A.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < dim, got k={k}, dim={n}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    dense = method == "dense" or (method == "auto" and (n <= DENSE_LIMIT or not sparse.issparse(A)))
    if dense:
        Ad, Bd = _dense(A), _dense(B)
        lam, V = sla.eigh(Ad, Bd, subset_by_index=[0, k - 1])
        used_sigma = None
    else:
        A = sparse.csr_matrix(A)
        B = sparse.csr_matrix(B)
        used_sigma = _default_shift(A, B) if sigma is None else float(sigma)
        K = (A - used_sigma * B).tocsc()
        lu = symmetric_splu(K) or spla.splu(K)
        OPinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            lam, V = spla.eigsh(A, k=k, M=B, sigma=used_sigma, which="LM", OPinv=OPinv,
                                v0=v0, ncv=max(2 * k + 1, 24), maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            res = residual_norms(A, B, exc.eigenvalues, exc.eigenvectors) if len(exc.eigenvalues) else None
            raise EigenSolveError("Lanczos iteration did not converge", res) from exc
    # Rayleigh-Ritz on the returned block: B-orthonormal even inside multiplets
    V = np.asarray(V)
    Ar = V.T @ (A @ V)
    Br = V.T @ (B @ V)
    lam, Y = sla.eigh(0.5 * (Ar + Ar.T), 0.5 * (Br + Br.T))
    V = V @ Y
    res = residual_norms(A, B, lam, V)
    if np.any(res > tol):
        raise EigenSolveError(f"residuals {res.max():.3e} exceed tol={tol:g}", res)
    return SpectralResult(lam, V, res, sigma=used_sigma)

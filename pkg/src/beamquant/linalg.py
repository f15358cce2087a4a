"""Dense complex Hermitian linear-algebra kernel.

Small matrices only (dimensions up to a few hundred): Cholesky
factorization with an explicit pivot tolerance, positive-definite solves,
minimum eigenvalue, and Hermitian quadratic forms. All tolerance constants
live in one place (:class:`Tolerances`) because every downstream
optimality certificate cites them.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite


@dataclass(frozen=True)
class Tolerances:
    """Central numerical tolerance configuration.

    residual: relative residual bound for PD solves.
    psd_slack: absolute slack (scaled by 1 + matrix norm) below which an
        eigenvalue is still counted as nonnegative.
    imag_rel: relative bound on the imaginary part of quantities that
        must be real.
    """

    residual: float = 1e-10
    psd_slack: float = 1e-9
    imag_rel: float = 1e-10

    def pivot_floor(self, dim, max_diag):
        # Cholesky pivot threshold: dim * machine epsilon * max diagonal.
        return dim * np.finfo(float).eps * max(max_diag, 0.0)


DEFAULT_TOL = Tolerances()


def hermitian(entries) -> np.ndarray:
    """Construct a Hermitian matrix from arbitrary square entries.

    Symmetrizes (keeps the Hermitian part) so that A[i, j] == conj(A[j, i])
    exactly and the diagonal is real.
    """
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    h = 0.5 * (a + a.conj().T)
    np.fill_diagonal(h, h.diagonal().real)
    return h


def matrices_close(a, b, tol) -> bool:
    """Entrywise equality within an absolute tolerance."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    return bool(np.max(np.abs(a - b)) <= tol) if a.size else True


def cholesky(a, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Lower-triangular L with L @ L^H == a for Hermitian PD ``a``.

    Raises NotPositiveDefinite when a pivot falls at or below
    dim * eps * max-diagonal.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"cholesky needs a square matrix, got {a.shape}")
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    floor = tol.pivot_floor(n, float(np.max(a.diagonal().real, initial=0.0)))
    L = np.zeros((n, n), dtype=complex)
    for j in range(n):
        d = a[j, j].real - np.real(L[j, :j] @ L[j, :j].conj())
        if d <= floor:
            raise NotPositiveDefinite(f"pivot {d:.3e} at column {j} (floor {floor:.3e})")
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j].conj()) / L[j, j]
    return L


def solve_hermitian_pd(a, b, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Solve a @ x = b for Hermitian positive-definite ``a``.

    Positive definiteness is checked through the Cholesky factorization;
    NotPositiveDefinite propagates. The residual satisfies
    ||a x - b|| <= tol.residual * ||b|| for well-conditioned inputs.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"matrix {a.shape} vs vector {b.shape}")
    L = cholesky(a, tol)
    y = scipy.linalg.solve_triangular(L, b, lower=True, check_finite=False)
    return scipy.linalg.solve_triangular(L.conj().T, y, lower=False, check_finite=False)


def min_eigenvalue(a) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {a.shape}")
    if a.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(a)[0])


def quadratic_form(a, x, tol: Tolerances = DEFAULT_TOL) -> float:
    """Real value of x^H a x for Hermitian ``a``.

    The imaginary part is asserted small (|Im| <= imag_rel * (1 + |Re|))
    and then discarded.
    """
    a = np.asarray(a, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != x.shape[0]:
        raise DimensionMismatch(f"matrix {a.shape} vs vector {x.shape}")
    v = complex(x.conj() @ (a @ x))
    if abs(v.imag) > tol.imag_rel * (1.0 + abs(v.real)):
        raise DimensionMismatch(
            f"quadratic form has non-negligible imaginary part {v.imag:.3e}"
        )
    return v.real


def is_psd(a, tol: Tolerances = DEFAULT_TOL) -> bool:
    """PSD test with the configured slack, scaled by 1 + max-abs norm."""
    a = np.asarray(a, dtype=complex)
    scale = 1.0 + (float(np.max(np.abs(a))) if a.size else 0.0)
    return min_eigenvalue(a) >= -tol.psd_slack * scale

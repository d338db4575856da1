"""Dense real symmetric matrix utilities.

Eigendecompositions and the generalized symmetric eigenproblem are thin
wrappers over LAPACK (through numpy/scipy); matrix functions are built on
top of them. Constraint elimination is a full-pivoting Gauss-Jordan
reduction so that the retained variables are chosen deterministically.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DegenerateGramError, NonFiniteError, NotPSDError

# clamp band for slightly negative eigenvalues of nominally PSD input
PSD_CLAMP_TOL = 1e-8


class Spectrum(NamedTuple):
    """Eigenvalues in ascending order with eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray


def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix has non-finite entries")


def symmetrize(a) -> np.ndarray:
    """Return ``(a + a.T) / 2`` as a float array; symmetric to the last bit."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    _check_finite(a)
    return 0.5 * (a + a.T)


def eigh(a) -> Spectrum:
    """Full spectrum of a real symmetric matrix, eigenvalues ascending."""
    a = symmetrize(a)
    w, v = np.linalg.eigh(a)
    return Spectrum(w, v)


def _psd_spectrum(a):
    w, v = eigh(a)
    scale = max(float(np.max(np.abs(w))), 0.0) if w.size else 0.0
    if w.size and w[0] < -PSD_CLAMP_TOL * max(scale, np.finfo(float).tiny):
        raise NotPSDError(f"minimal eigenvalue {w[0]:.3e} is negative (scale {scale:.3e})")
    return w, v


def sqrtm_psd(a, floor: float = 0.0) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix.

    Eigenvalues below ``floor`` (including tolerated small negatives) are
    replaced by ``floor`` before taking the root.
    """
    w, v = _psd_spectrum(a)
    # eigenvalues at rounding level are zeros in disguise; their roots
    # (~1e-8) would otherwise leak into traces
    if w.size:
        w = np.where(w <= w.size * np.finfo(float).eps * np.max(np.abs(w)), 0.0, w)
    w = np.maximum(w, floor)
    r = (v * np.sqrt(w)) @ v.T
    return 0.5 * (r + r.T)


def logm_psd(a, eigen_floor: float = 1e-12) -> np.ndarray:
    """Matrix logarithm of a PSD matrix, clamping eigenvalues at ``eigen_floor``."""
    if eigen_floor <= 0:
        raise ValueError("eigen_floor must be positive")
    w, v = _psd_spectrum(a)
    r = (v * np.log(np.maximum(w, eigen_floor))) @ v.T
    return 0.5 * (r + r.T)


def inv_sqrt(g, degeneracy_tol: float = 1e-12) -> np.ndarray:
    """Inverse square root ``sum_i |g_i><g_i| / sqrt(l_i)`` of an SPD Gram matrix.

    The positive branch is always taken. Raises ``DegenerateGramError`` when
    the smallest eigenvalue is not above ``degeneracy_tol`` times the largest.
    """
    w, v = eigh(g)
    if w.size == 0:
        return np.zeros((0, 0))
    if w[-1] <= 0 or w[0] <= degeneracy_tol * w[-1]:
        raise DegenerateGramError(
            f"Gram matrix is degenerate: eigenvalues span [{w[0]:.3e}, {w[-1]:.3e}]"
        )
    r = (v / np.sqrt(w)) @ v.T
    return 0.5 * (r + r.T)


def gen_sym_eig(num, den, degeneracy_tol: float = 1e-12) -> Spectrum:
    """Solve ``num v = mu den v`` for symmetric ``num`` and SPD ``den``.

    Eigenvectors are den-orthonormal (``V.T @ den @ V = I``).
    """
    num = symmetrize(num)
    den = symmetrize(den)
    if num.shape != den.shape:
        raise ValueError(f"shape mismatch {num.shape} vs {den.shape}")
    if num.shape[0] == 0:
        return Spectrum(np.zeros(0), np.zeros((0, 0)))
    dw = np.linalg.eigvalsh(den)
    if dw[-1] <= 0 or dw[0] <= degeneracy_tol * dw[-1]:
        raise DegenerateGramError(
            f"denominator is not positive definite: eigenvalues span [{dw[0]:.3e}, {dw[-1]:.3e}]"
        )
    try:
        w, v = scipy.linalg.eigh(num, den)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGramError(str(exc)) from exc
    return Spectrum(w, v)


def null_space_basis(constraints, rank_tol: float = 1e-10) -> np.ndarray:
    """Basis ``M`` of the solutions of ``constraints @ x = 0``.

    Gauss-Jordan elimination with full (row and column) pivoting. Rows are
    first scaled to unit max-norm; a pivot below ``rank_tol`` ends the
    elimination, so redundant rows are dropped. The returned matrix has one
    column per free variable; the free variable itself carries a unit
    entry in its column.

    Parameters
    ----------
    constraints : array_like, shape (n_rows, dim)
        Homogeneous constraint rows. Zero rows are allowed.

    Returns
    -------
    ndarray, shape (dim, dim - rank)
    """
    c = np.array(constraints, dtype=float, ndmin=2)
    _check_finite(c)
    n_rows, dim = c.shape
    if n_rows == 0 or dim == 0:
        return np.eye(dim)
    row_scale = np.max(np.abs(c), axis=1)
    c = c[row_scale > 0] / row_scale[row_scale > 0, None]
    n_rows = c.shape[0]
    perm = np.arange(dim)
    rank = 0
    while rank < min(n_rows, dim):
        sub = np.abs(c[rank:, rank:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] <= rank_tol:
            break
        i += rank
        j += rank
        c[[rank, i]] = c[[i, rank]]
        c[:, [rank, j]] = c[:, [j, rank]]
        perm[[rank, j]] = perm[[j, rank]]
        c[rank] /= c[rank, rank]
        factors = c[:, rank].copy()
        factors[rank] = 0.0
        c -= np.outer(factors, c[rank])
        rank += 1
    n_free = dim - rank
    basis = np.zeros((dim, n_free))
    basis[perm[:rank]] = -c[:rank, rank:]
    basis[perm[rank:]] = np.eye(n_free)
    return basis

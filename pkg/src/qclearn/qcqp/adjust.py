"""Minimal-disturbance adjustments that restore the quadratic constraints.

Each adjustment multiplies the Kraus stack by the inverse square root of
the relevant Gram matrix; ``adjust_canonical`` only rotates the stack in
the Kraus index and leaves every observable unchanged.
"""

import numpy as np

from .. import matfun
from ..states import as_stack, orthonormality_violation


def adjust_orthogonal(b, degeneracy_tol: float = 1e-12) -> np.ndarray:
    """Make ``sum_s B_s B_s^T = I`` by left-multiplying every block with ``G^{-1/2}``.

    ``G[j, j'] = sum_{s,k} b[s,j,k] b[s,j',k]``; the same factor is applied
    to all blocks.
    """
    b = as_stack(b)
    g = np.einsum("sjk,sik->ji", b, b)
    r = matfun.inv_sqrt(g, degeneracy_tol)
    return np.einsum("ji,sik->sjk", r, b)


def adjust_trace_preserving(b, degeneracy_tol: float = 1e-12) -> np.ndarray:
    """Make ``sum_s B_s^T B_s = I`` by right-multiplying every block with ``G^{-1/2}``.

    The column Gram ``G[k, k'] = sum_{s,j} b[s,j,k] b[s,j,k']`` has rank at
    most ``n_s * D``, so it is degenerate whenever the stack is shallower
    than the minimal Kraus rank; ``DegenerateGramError`` is raised then.
    """
    b = as_stack(b)
    g = np.einsum("sjk,sjq->kq", b, b)
    r = matfun.inv_sqrt(g, degeneracy_tol)
    return b @ r


def adjust_canonical(b, s=None) -> np.ndarray:
    """Rotate the Kraus stack so that ``Tr B_s B_t^T = 0`` for ``s != t``.

    The new blocks are ``sum_s' g_i[s'] b[s']`` for the eigenvectors
    ``g_i`` of the Kraus-space Gram matrix, ordered by decreasing Gram
    eigenvalue. ``s`` is accepted for interface symmetry: the transform
    does not depend on the superoperator as long as it is the same for
    every Kraus index.
    """
    b = as_stack(b)
    if b.shape[0] == 1:
        return b.copy()
    g = np.einsum("sjk,tjk->st", b, b)
    w, v = matfun.eigh(g)
    v = v[:, ::-1]
    # deterministic sign: largest component of each eigenvector positive
    idx = np.argmax(np.abs(v), axis=0)
    v = v * np.where(v[idx, np.arange(v.shape[1])] < 0, -1.0, 1.0)
    return np.einsum("si,sjk->ijk", v, b)


def orthonormalize_rows(c, degeneracy_tol: float = 1e-12) -> np.ndarray:
    """``G^{-1/2} C`` for the row Gram ``G = C C^T``; rows come out orthonormal."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    if c.shape[0] == 0:
        return c
    return matfun.inv_sqrt(c @ c.T, degeneracy_tol) @ c


def remove_projections(b, c_orth) -> np.ndarray:
    """Subtract from ``b`` its components along orthonormal constraint rows."""
    b = as_stack(b)
    x = b.ravel()
    if len(c_orth):
        x = x - c_orth.T @ (c_orth @ x)
    return x.reshape(b.shape)


def external_violation(b, c_orth) -> float:
    """Largest ``|<c_d|b>|`` over orthonormalized external rows."""
    if len(c_orth) == 0:
        return 0.0
    return float(np.max(np.abs(c_orth @ as_stack(b).ravel())))


def adjust_with_external(b, external, inner_iterations: int = 5, adjust=adjust_orthogonal):
    """Alternate a quadratic-constraint adjustment with removal of external projections.

    Parameters
    ----------
    b : array_like
        Kraus stack (or single block).
    external : array_like, shape (N_e, n_s*D*n)
        External homogeneous constraint rows (need not be orthonormal).
    inner_iterations : int
        Number of (adjust, project) rounds. A handful is enough inside the
        outer solver; exact satisfaction of both needs on the order of a
        hundred rounds.
    adjust : callable
        Quadratic-constraint adjustment, ``adjust_orthogonal`` by default.

    Returns
    -------
    b_adj : ndarray
    quad_residual : float
        Orthonormality violation of ``b_adj`` (or the violation measured by
        ``adjust`` if it is not the orthogonal adjustment).
    ext_residual : float
        Largest external-row violation of ``b_adj``.
    """
    b = as_stack(b)
    c = np.asarray(external, dtype=float).reshape(-1, b.size)
    if c.shape[0] == 0:
        out = adjust(b)
        return out, _quad_residual(out, adjust), 0.0
    c_orth = orthonormalize_rows(c)
    out = b
    for _ in range(max(1, int(inner_iterations))):
        out = adjust(out)
        out = remove_projections(out, c_orth)
    return out, _quad_residual(out, adjust), external_violation(out, c_orth)


def _quad_residual(b, adjust):
    if adjust is adjust_trace_preserving:
        from ..states import trace_violation

        return trace_violation(b)
    return orthonormality_violation(b)

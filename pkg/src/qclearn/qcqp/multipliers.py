"""Lagrange multipliers from a least-squares fit of the Lagrangian variation.

With the Lagrangian

    L = sum_s <b_s|S|b_s> + sum lam_jj' (delta_jj' - sum_s b_sj . b_sj')
        - sum nu_ss' <b_s|b_s'> + sum kap_kk' (delta_kk' - sum_s b_s:k . b_s:k')

half the variation with respect to ``b_s`` is

    g_s = S b_s - lam b_s - sum_s' nu_ss' b_s' - b_s kap.

At a stationary point ``g = 0``; away from it the multipliers are chosen
to minimize ``|g|``. Only the independent components of the symmetric
matrices are unknowns: ``lam_ij`` with ``j <= i`` sits at column
``r = i(i+1)/2 + j``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import BadShapeError, SingularSystemError
from ..states import as_stack

SINGULAR_TOL = 1e-12


@dataclass
class LagrangeMultipliers:
    """``lam`` (D x D), ``nu`` (n_s x n_s, zero diagonal), optional ``kappa`` (n x n)."""

    lam: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray = None

    def __post_init__(self):
        self.lam = _sym(self.lam)
        self.nu = _sym(self.nu)
        np.fill_diagonal(self.nu, 0.0)
        if self.kappa is not None:
            self.kappa = _sym(self.kappa)

    @classmethod
    def zeros(cls, d: int, n_s: int = 1, n: int = None) -> "LagrangeMultipliers":
        return cls(np.zeros((d, d)), np.zeros((n_s, n_s)), None if n is None else np.zeros((n, n)))

    @property
    def trace(self) -> float:
        """``Tr lam + Tr kappa``; equals the total fidelity at a stationary point."""
        t = float(np.trace(self.lam))
        if self.kappa is not None:
            t += float(np.trace(self.kappa))
        return t


def _sym(a):
    a = np.array(a, dtype=float, ndmin=2)
    return 0.5 * (a + a.T)


def _tri(m):
    return [(i, j) for i in range(m) for j in range(i + 1)]


def _flat_s(s, b):
    n_s, d, n = b.shape
    if (d, n) != (s.D, s.n):
        raise BadShapeError(f"operator shape ({d}, {n}) does not match ({s.D}, {s.n})")
    return (b.reshape(n_s, -1) @ s.matrix).reshape(b.shape)


def design_matrix(b, mode: str = "orthogonality"):
    """Columns ``d g / d(multiplier)`` (negated) and their ``(name, i, j)`` labels."""
    b = as_stack(b)
    n_s, d, n = b.shape
    cols, labels = [], []
    if mode in ("orthogonality", "both"):
        for i, j in _tri(d):
            c = np.zeros_like(b)
            c[:, i, :] += b[:, j, :]
            if i != j:
                c[:, j, :] += b[:, i, :]
            cols.append(c.ravel())
            labels.append(("lam", i, j))
    if mode in ("trace_preserving", "both"):
        for i, j in _tri(n):
            c = np.zeros_like(b)
            c[:, :, j] += b[:, :, i]
            if i != j:
                c[:, :, i] += b[:, :, j]
            cols.append(c.ravel())
            labels.append(("kappa", i, j))
    for i, j in _tri(n_s):
        if i == j:
            continue
        c = np.zeros_like(b)
        c[i] += b[j]
        c[j] += b[i]
        cols.append(c.ravel())
        labels.append(("nu", i, j))
    return np.array(cols).T.reshape(b.size, -1), labels


def _tangent_projector(constraints, dim):
    if constraints is None or len(constraints) == 0:
        return None
    rows = constraints.rows if hasattr(constraints, "rows") else np.atleast_2d(constraints)
    q = scipy.linalg.orth(rows.T)
    return q


def _project(x, q):
    if q is None:
        return x
    return x - q @ (q.T @ x)


def lagrange_multipliers(
    s, b, mode: str = "orthogonality", external=None, allow_rank_deficient: bool = False
) -> LagrangeMultipliers:
    """Multipliers minimizing the L2 norm of the variation at ``b``.

    ``external`` rows (if any) carry their own multipliers; their
    directions are projected out of the fit, so only the components of
    the variation tangent to the external constraints are matched.

    Raises ``SingularSystemError`` when the design matrix is rank
    deficient, unless ``allow_rank_deficient`` is set, in which case the
    minimum-norm solution is returned.
    """
    b = as_stack(b)
    n_s, d, n = b.shape
    g = _flat_s(s, b).ravel()
    a, labels = design_matrix(b, mode)
    q = _tangent_projector(external, b.size)
    g = _project(g, q)
    a = _project(a, q)
    lm = LagrangeMultipliers.zeros(d, n_s, n if mode != "orthogonality" else None)
    if a.shape[1] == 0:
        return lm
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0.0:
        return lm
    if sv[-1] <= SINGULAR_TOL * sv[0] and not allow_rank_deficient:
        raise SingularSystemError(
            f"multiplier system is rank deficient (singular values {sv[-1]:.3e} / {sv[0]:.3e})"
        )
    x = np.linalg.lstsq(a, g, rcond=SINGULAR_TOL)[0]
    lam, nu = np.zeros((d, d)), np.zeros((n_s, n_s))
    kap = None if lm.kappa is None else np.zeros((n, n))
    target = {"lam": lam, "nu": nu, "kappa": kap}
    for val, (name, i, j) in zip(x, labels):
        m = target[name]
        m[i, j] = m[j, i] = val
    return LagrangeMultipliers(lam, nu, kap)


def lambda_closed_form(s, u) -> np.ndarray:
    """``lam = Herm((S u) u^T)`` for a single block with orthonormal rows."""
    u = as_stack(u)
    if u.shape[0] != 1:
        raise BadShapeError("closed form applies to a single block")
    su = s.apply(u[0])
    return _sym(su @ u[0].T)


def variation(s, b, lm: LagrangeMultipliers) -> np.ndarray:
    """``g_s = S b_s - lam b_s - sum nu_ss' b_s' - b_s kappa``."""
    b = as_stack(b)
    g = _flat_s(s, b)
    g = g - np.einsum("ji,sik->sjk", lm.lam, b)
    g = g - np.einsum("st,tjk->sjk", lm.nu, b)
    if lm.kappa is not None:
        g = g - b @ lm.kappa
    return g


def residual(s, b, lm: LagrangeMultipliers, constraints=None) -> float:
    """L2 norm of the variation, restricted to the null space of ``constraints`` if given."""
    g = variation(s, b, lm).ravel()
    g = _project(g, _tangent_projector(constraints, g.size))
    return float(np.linalg.norm(g))

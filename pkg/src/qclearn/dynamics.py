"""Time evolution of a ground-state solution under its own multiplier matrix.

Replacing ``S`` by ``lam (x) I`` (one Hamiltonian) turns the evolution
equation into ``i hbar dU/dt = lam U``. In the eigenbasis of ``lam`` every
row of the solution picks up its own phase ``exp(-i lam_p t / hbar)``.
Complex values are carried as explicit (re, im) pairs.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import matfun
from .errors import BadShapeError, BadSpecError, NotConvergedError
from .states import as_stack

EXP_LIMIT = 700.0


@dataclass
class ComplexOperator:
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        self.re = np.asarray(self.re, dtype=float)
        self.im = np.asarray(self.im, dtype=float)
        if self.re.shape != self.im.shape:
            raise BadShapeError("real and imaginary parts differ in shape")

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    def row_gram(self) -> np.ndarray:
        """``W W^dagger`` of the complex rows."""
        w = self.to_complex()
        return w @ w.conj().T

    def unitarity_violation(self) -> float:
        g = self.row_gram()
        return float(np.max(np.abs(g - np.eye(g.shape[0]))))

    @property
    def amplitude(self) -> np.ndarray:
        return np.hypot(self.re, self.im)

    @property
    def phase(self) -> np.ndarray:
        return np.arctan2(self.im, self.re)


@dataclass
class GroundStateEvolution:
    """Eigenvalues ``lam_p`` of the multiplier matrix, the rotated solution ``v0`` and the basis."""

    lambda_eigs: np.ndarray
    v0: np.ndarray
    basis: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise BadSpecError("hbar must be positive")

    @property
    def D(self) -> int:
        return self.v0.shape[0]


def from_operator(u, lam, hbar: float = 1.0) -> GroundStateEvolution:
    """Diagonalize ``lam = B diag(lam_p) B^T`` and rotate ``v0 = B^T u``."""
    u = as_stack(u)
    if u.shape[0] != 1:
        raise BadShapeError("evolution is defined for a single block")
    u = u[0]
    lam = matfun.symmetrize(lam)
    if lam.shape[0] != u.shape[0]:
        raise BadShapeError(f"lambda is {lam.shape}, operator has {u.shape[0]} rows")
    w, b = matfun.eigh(lam)
    return GroundStateEvolution(w, b.T @ u, b, hbar)


def prepare(solution, hbar: float = 1.0) -> GroundStateEvolution:
    """Evolution data of a converged single-block solution with ``D = n``."""
    if not solution.converged:
        raise NotConvergedError("cannot evolve a solution that did not converge", partial=solution)
    b = as_stack(solution.b)
    if b.shape[0] != 1 or b.shape[1] != b.shape[2]:
        raise BadShapeError("evolution requires n_s = 1 and D = n")
    return from_operator(b, solution.multipliers.lam, hbar)


def _phases(g, t):
    return g.lambda_eigs * (t / g.hbar)


def evolve(g: GroundStateEvolution, t: float) -> ComplexOperator:
    """``v_p(t) = exp(-i lam_p t / hbar) v_p(0)`` row by row."""
    a = _phases(g, t)[:, None]
    return ComplexOperator(np.cos(a) * g.v0, -np.sin(a) * g.v0)


def evolve_original(g: GroundStateEvolution, t: float) -> ComplexOperator:
    """The evolved solution rotated back to the original basis, ``B v(t)``."""
    v = evolve(g, t)
    return ComplexOperator(g.basis @ v.re, g.basis @ v.im)


def density_tensor_pure(g: GroundStateEvolution, t: float) -> np.ndarray:
    """Complex ``(D, n, D, n)`` tensor ``exp(-i(lam_p - lam_p') t / hbar) v_pk v_p'k'``."""
    a = _phases(g, t)
    ph = np.exp(-1j * (a[:, None] - a[None, :]))
    return ph[:, None, :, None] * np.einsum("pk,ql->pkql", g.v0, g.v0)


def liouville_commutator_residual(s, solution) -> float:
    """Frobenius norm of ``S Y - Y S`` for ``Y = |U><U|`` over the flattened index."""
    x = as_stack(solution.b)[0].ravel()
    sx = s.matrix @ x
    # S Y - Y S = (S x) x^T - x (S x)^T for symmetric S
    c = np.outer(sx, x) - np.outer(x, sx)
    return float(np.linalg.norm(c))


def liouville_commutator_closed_form(solution) -> float:
    """The same commutator with ``S U`` replaced by ``lam U`` (exact at a stationary point)."""
    u = as_stack(solution.b)[0]
    x = u.ravel()
    lx = (solution.multipliers.lam @ u).ravel()
    return float(np.linalg.norm(np.outer(lx, x) - np.outer(x, lx)))


def evolve_dissipative(g: GroundStateEvolution, t: float, kappa: float) -> np.ndarray:
    """Heat-like evolution ``v_p(t) = exp(lam_p t / kappa) v_p(0)``; no unitarity."""
    if not kappa > 0:
        raise BadSpecError("kappa must be positive")
    e = g.lambda_eigs * (t / kappa)
    if np.any(e > EXP_LIMIT):
        raise OverflowError(f"exponent {float(np.max(e)):.1f} exceeds {EXP_LIMIT}")
    return np.exp(e)[:, None] * g.v0


def write_trajectory_csv(g: GroundStateEvolution, times, path, original_basis: bool = True) -> float:
    """Write ``t,row,col,re,im,amplitude,phase`` rows; returns the largest unitarity violation."""
    worst = 0.0
    step = evolve_original if original_basis else evolve
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "row", "col", "re", "im", "amplitude", "phase"])
        for t in times:
            v = step(g, float(t))
            worst = max(worst, v.unitarity_violation())
            amp, ph = v.amplitude, v.phase
            for p in range(v.re.shape[0]):
                for k in range(v.re.shape[1]):
                    w.writerow(
                        [f"{t:.17g}", p, k]
                        + [f"{x:.17g}" for x in (v.re[p, k], v.im[p, k], amp[p, k], ph[p, k])]
                    )
    return worst

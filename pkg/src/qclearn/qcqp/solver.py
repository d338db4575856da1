"""Iterative eigenvalue solver for the constrained fidelity maximization.

Each iteration

1. eliminates the linear constraints (helper rows regenerated from the
   previous iterate plus the fixed external rows) and solves the reduced
   generalized eigenproblem of ``S - lam (x) I - ...``;
2. keeps the eigenvector of maximal ``mu``, rescaled to ``sum b^2 = D``;
3. restores the quadratic constraints (orthogonal or trace-preserving
   adjustment, alternating with external-row projection) and, for
   several Kraus blocks, rotates to the canonical gauge;
4. refits the Lagrange multipliers at the adjusted iterate.

The first iteration uses zero multipliers and no helper rows. The loop
stops once the fidelity stops changing and the selected ``mu`` is zero.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .. import matfun
from ..errors import BadShapeError, BadSpecError, DegenerateGramError
from ..states import as_stack, gauge_violation, orthonormality_violation, trace_violation
from . import adjust as _adj
from .constraints import MODES, ConstraintSet, helper_constraints
from .multipliers import LagrangeMultipliers, lagrange_multipliers, residual


@dataclass
class SolverConfig:
    max_iterations: int = 200
    convergence_rel_tol: float = 1e-9
    mu_tol: float = 1e-8
    constraint_tol: float = 1e-10
    adjust_inner_iterations: int = 5
    state_selection: str = "max_mu"
    gauge: str = "canonical"
    constraint_mode: str = "orthogonality"
    rank_tol: float = 1e-10

    def __post_init__(self):
        for name in ("max_iterations", "convergence_rel_tol", "mu_tol", "constraint_tol", "rank_tol"):
            if not getattr(self, name) > 0:
                raise BadSpecError(f"{name} must be positive")
        if not 1 <= self.adjust_inner_iterations <= 100:
            raise BadSpecError("adjust_inner_iterations must lie in [1, 100]")
        if self.state_selection != "max_mu":
            raise BadSpecError("only the max_mu selection rule is available")
        if self.gauge not in ("canonical", "none"):
            raise BadSpecError(f"unknown gauge {self.gauge!r}")
        if self.constraint_mode not in MODES:
            raise BadSpecError(f"unknown constraint mode {self.constraint_mode!r}")


@dataclass
class Solution:
    b: np.ndarray
    multipliers: LagrangeMultipliers
    fidelity: float
    mu_selected: float
    residual: float
    iterations: int
    converged: bool
    constraint_violation: float = 0.0
    history: list = field(default_factory=list)
    message: str = ""

    @property
    def u(self) -> np.ndarray:
        """First (for ``n_s = 1`` the only) block."""
        return self.b[0]

    @property
    def n_s(self) -> int:
        return self.b.shape[0]


def reduced_problem(s, lm: LagrangeMultipliers, m, n_s: int = None):
    """``num = M^T SS M`` and ``den = M^T M`` for the multiplier-shifted superoperator.

    ``SS = I_ns (x) (S - lam (x) I_n - I_D (x) kappa) - nu (x) I_Dn``.
    """
    dn = s.D * s.n
    m = np.asarray(m, dtype=float)
    if n_s is None:
        n_s = m.shape[0] // dn
    if m.ndim != 2 or m.shape[0] != n_s * dn:
        raise BadShapeError(f"elimination basis has {m.shape[0]} rows, expected {n_s * dn}")
    a = s.matrix - np.kron(lm.lam, np.eye(s.n))
    if lm.kappa is not None:
        a = a - np.kron(np.eye(s.D), lm.kappa)
    if lm.nu.shape != (n_s, n_s):
        raise BadShapeError(f"nu has shape {lm.nu.shape}, expected ({n_s}, {n_s})")
    # apply the block operator without forming the (n_s Dn)^2 matrix
    mb = m.reshape(n_s, dn, -1)
    sm = np.einsum("ij,sjc->sic", a, mb) - np.einsum("st,tic->sic", lm.nu, mb)
    num = m.T @ sm.reshape(n_s * dn, -1)
    den = m.T @ m
    return 0.5 * (num + num.T), 0.5 * (den + den.T)


def eig_step(num, den, m, shape):
    """Maximal-``mu`` eigenpair of ``num v = mu den v``, mapped back and scaled to ``sum b^2 = D``."""
    w, v = matfun.gen_sym_eig(num, den)
    if w.size == 0:
        raise DegenerateGramError("no free variables left after constraint elimination")
    x = np.asarray(m) @ v[:, -1]
    b = x.reshape(shape)
    b = b * np.sqrt(shape[1] / np.sum(b * b))
    return float(w[-1]), b


def constraint_violation(b, mode: str = "orthogonality", gauge: bool = True, external=None) -> float:
    """Largest violation of the active quadratic and external constraints."""
    b = as_stack(b)
    v = 0.0
    if mode in ("orthogonality", "both"):
        v = max(v, orthonormality_violation(b))
    if mode in ("trace_preserving", "both"):
        v = max(v, trace_violation(b))
    if gauge and b.shape[0] > 1:
        v = max(v, gauge_violation(b))
    if external is not None and len(external):
        v = max(v, _adj.external_violation(b, _adj.orthonormalize_rows(external.rows)))
    return v


def _adjust(b, cfg: SolverConfig, ext: ConstraintSet):
    mode = cfg.constraint_mode
    if mode == "orthogonality":
        fn = _adj.adjust_orthogonal
    elif mode == "trace_preserving":
        fn = _adj.adjust_trace_preserving
    else:

        def fn(x):
            return _adj.adjust_trace_preserving(_adj.adjust_orthogonal(x))

    if len(ext):
        b = _adj.adjust_with_external(b, ext.rows, cfg.adjust_inner_iterations, fn)[0]
    else:
        b = fn(b)
    if cfg.gauge == "canonical" and b.shape[0] > 1:
        b = _adj.adjust_canonical(b)
    return b


def solve(s, config: SolverConfig = None, external: ConstraintSet = None, n_s: int = 1, initial=None) -> Solution:
    """Maximize ``sum_s <b_s|S|b_s>`` under the configured constraints.

    Parameters
    ----------
    s : Superoperator
    config : SolverConfig, optional
    external : ConstraintSet, optional
        Fixed homogeneous rows over the flattened ``(n_s, D, n)`` stack.
    n_s : int
        Number of Kraus blocks. Only ``n_s = 1`` is expected to converge.
    initial : array_like, optional
        Starting iterate; it is adjusted and used to seed the multipliers
        and helper rows instead of the zero-multiplier first step.

    Returns
    -------
    Solution
        ``converged`` is False when the iteration budget runs out; the
        solution then holds the feasible iterate of largest fidelity.
    """
    cfg = config or SolverConfig()
    shape = (int(n_s), s.D, s.n)
    dim = int(np.prod(shape))
    ext = external if external is not None else ConstraintSet(dim)
    if ext.dim != dim:
        raise BadShapeError(f"external rows have dimension {ext.dim}, expected {dim}")
    mode = cfg.constraint_mode
    gauge = cfg.gauge == "canonical"

    def evaluate(b):
        lm = lagrange_multipliers(s, b, mode, external=ext, allow_rank_deficient=True)
        cons = helper_constraints(b, mode) + ext
        return lm, cons

    lm = LagrangeMultipliers.zeros(s.D, shape[0], None if mode == "orthogonality" else s.n)
    cons = ext
    f_prev = None
    if initial is not None:
        b = _adjust(as_stack(initial).reshape(shape).astype(float), cfg, ext)
        lm, cons = evaluate(b)
        f_prev = s.total_fidelity(b)

    history = []
    best = None
    last = None
    message = "iteration budget exhausted"
    for it in range(1, cfg.max_iterations + 1):
        try:
            m = matfun.null_space_basis(cons.rows, cfg.rank_tol)
            num, den = reduced_problem(s, lm, m, shape[0])
            mu, cand = eig_step(num, den, m, shape)
            b = _adjust(cand, cfg, ext)
        except DegenerateGramError as exc:
            if last is None:
                raise
            message = f"stopped at iteration {it}: {exc}"
            break
        f = s.total_fidelity(b)
        lm, cons = evaluate(b)
        res = residual(s, b, lm, ext if len(ext) else None)
        viol = constraint_violation(b, mode, gauge, ext)
        history.append((it, f, mu, res, viol))
        last = Solution(b, lm, f, mu, res, it, False, viol, history)
        if viol <= cfg.constraint_tol and (best is None or f > best.fidelity):
            best = last
        done = (
            f_prev is not None
            and abs(f - f_prev) <= cfg.convergence_rel_tol * abs(f)
            and abs(mu) <= cfg.mu_tol * (1.0 + abs(f))
            and viol <= cfg.constraint_tol
        )
        if done or (f == 0.0 and f_prev == 0.0 and viol <= cfg.constraint_tol):
            last.converged = True
            last.message = "converged"
            return last
        f_prev = f
    out = best if best is not None else last
    out.history = history
    out.message = message
    return out


def write_trace_csv(solution: Solution, path):
    """Per-iteration diagnostics: iteration, fidelity, mu_selected, residual, max_constraint_violation."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "fidelity", "mu_selected", "residual", "max_constraint_violation"])
        for row in solution.history:
            w.writerow([row[0]] + [f"{x:.17g}" for x in row[1:]])

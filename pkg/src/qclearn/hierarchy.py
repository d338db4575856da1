"""Hierarchy of partially unitary operators of decreasing fidelity.

Level ``s`` maximizes ``<U|S|U>`` over operators with orthonormal rows
subject to ``<U|S|U_t> = 0`` for every earlier level ``t``. The levels are
therefore orthogonal under ``S`` (their Gram matrix is ``diag(F_s)``) but
generally not under the plain Frobenius product. A mixed unitary channel
is assembled from the levels with weights ``|w_s|^2``.
"""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadLevelError, BadSpecError, NotConvergedError, ZeroWeightsError
from .qcqp import SolverConfig, plain_rows, solve, superop_rows
from .states import MixedUnitaryChannel, as_stack

DEFAULT_MAX_LEVELS = 7
VARIANTS = ("superop", "plain")


def default_level_config() -> SolverConfig:
    # with external rows the outer loop converges only as fast as the
    # alternating adjustment removes the row violation; more inner rounds
    # cut the outer iteration count several-fold. The tighter stopping
    # rule keeps Tr(lambda) and the fidelity within ~1e-11 of each other.
    return SolverConfig(max_iterations=500, convergence_rel_tol=1e-12, adjust_inner_iterations=50)


@dataclass
class HierarchyLevel:
    u: np.ndarray
    lam: np.ndarray
    fidelity: float
    iterations: int = 0
    residual: float = 0.0


@dataclass
class Hierarchy:
    """Ordered levels built on one superoperator (``superop`` may be None after loading)."""

    superop: object
    levels: list = field(default_factory=list)
    variant: str = "superop"

    def __len__(self):
        return len(self.levels)

    @property
    def fidelities(self) -> np.ndarray:
        return np.array([lv.fidelity for lv in self.levels])

    @property
    def operators(self) -> list:
        return [lv.u for lv in self.levels]

    def gram(self) -> np.ndarray:
        """``<U_s|S|U_t>``; diagonal ``F_s`` for the superop variant."""
        su = np.array([self.superop.apply(u).ravel() for u in self.operators])
        x = np.array([u.ravel() for u in self.operators])
        g = x @ su.T
        return 0.5 * (g + g.T)

    def plain_gram(self) -> np.ndarray:
        """``<U_s|U_t>``; the diagonal is ``D``, off-diagonal entries need not vanish."""
        x = np.array([u.ravel() for u in self.operators])
        return x @ x.T

    def to_dict(self, weights=None) -> dict:
        doc = {
            "variant": self.variant,
            "levels": [
                {
                    "u": lv.u.tolist(),
                    "lambda": lv.lam.tolist(),
                    "fidelity": lv.fidelity,
                    "iterations": lv.iterations,
                    "residual": lv.residual,
                }
                for lv in self.levels
            ],
            "fidelities": self.fidelities.tolist(),
        }
        if weights is not None:
            doc["weights"] = np.asarray(getattr(weights, "w", weights), dtype=float).tolist()
        return doc

    @classmethod
    def from_dict(cls, doc: dict, superop=None) -> "Hierarchy":
        levels = [
            HierarchyLevel(
                np.asarray(d["u"], dtype=float),
                np.asarray(d["lambda"], dtype=float),
                float(d["fidelity"]),
                int(d.get("iterations", 0)),
                float(d.get("residual", 0.0)),
            )
            for d in doc["levels"]
        ]
        return cls(superop, levels, doc.get("variant", "superop"))

    def save(self, path, weights=None):
        Path(path).write_text(json.dumps(self.to_dict(weights), indent=1))

    @classmethod
    def load(cls, path, superop=None) -> "Hierarchy":
        return cls.from_dict(json.loads(Path(path).read_text()), superop)


def build_hierarchy(s, levels: int, config: SolverConfig = None, variant: str = "superop", max_levels=DEFAULT_MAX_LEVELS) -> Hierarchy:
    """Solve for ``levels`` operators, each constrained against all earlier ones.

    ``variant="plain"`` uses ``<U|U_t> = 0`` instead of ``<U|S|U_t> = 0``.
    ``max_levels`` caps the request (with a warning); pass ``None`` to lift
    the cap. Raises ``NotConvergedError`` with the levels built so far as
    ``partial`` if a level fails to converge.
    """
    if variant not in VARIANTS:
        raise BadSpecError(f"unknown hierarchy variant {variant!r}")
    levels = int(levels)
    if levels < 1 or levels > s.D * s.n:
        raise BadSpecError(f"levels must lie in [1, {s.D * s.n}]")
    if max_levels is not None and levels > max_levels:
        warnings.warn(f"level count capped at {max_levels}", stacklevel=2)
        levels = max_levels
    cfg = config or default_level_config()
    h = Hierarchy(s, [], variant)
    for idx in range(levels):
        prior = h.operators
        ext = None
        if prior:
            ext = superop_rows(s, prior) if variant == "superop" else plain_rows(prior)
        sol = solve(s, cfg, external=ext)
        if not sol.converged:
            raise NotConvergedError(f"level {idx} did not converge: {sol.message}", partial=h)
        h.levels.append(
            HierarchyLevel(sol.u.copy(), sol.multipliers.lam, sol.fidelity, sol.iterations, sol.residual)
        )
    return h


@dataclass
class HierarchyWeights:
    """Expansion weights ``w_s``; ``probabilities`` normalizes ``sum w^2`` to one."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).reshape(-1)

    def normalized(self) -> np.ndarray:
        nrm = np.linalg.norm(self.w)
        if nrm == 0:
            raise ZeroWeightsError("all weights are zero")
        return self.w / nrm

    @property
    def probabilities(self) -> np.ndarray:
        return self.normalized() ** 2


def weights_from_operator(h: Hierarchy, v, tol: float = 1e-12) -> HierarchyWeights:
    """``w_s = <V|S|U_s> / <U_s|S|U_s>`` for a single block ``v``."""
    if not h.levels:
        raise BadLevelError("hierarchy has no levels")
    v = as_stack(v)[0]
    w = []
    for lv in h.levels:
        f = h.superop.inner(lv.u, lv.u)
        if f <= tol * max(1.0, h.superop.norm):
            raise BadLevelError(f"level fidelity {f!r} is not positive")
        w.append(h.superop.inner(v, lv.u) / f)
    return HierarchyWeights(np.array(w))


def to_mixed_unitary(h: Hierarchy, w) -> MixedUnitaryChannel:
    """Channel ``A -> sum_s p_s U_s A U_s^T`` with ``p_s = w_s^2 / sum w^2``."""
    if not isinstance(w, HierarchyWeights):
        w = HierarchyWeights(w)
    if w.w.size != len(h.levels):
        raise BadLevelError(f"{w.w.size} weights for {len(h.levels)} levels")
    p = w.probabilities
    return MixedUnitaryChannel(p / p.sum(), h.operators)


def mixed_unitary_rank_bound(kraus_rank: int) -> int:
    """Upper bound ``k^2 - k + 1`` on the number of unitaries for Kraus rank ``k``."""
    k = int(kraus_rank)
    if k < 1:
        raise BadSpecError("kraus_rank must be at least 1")
    return k * k - k + 1

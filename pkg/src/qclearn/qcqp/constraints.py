"""Homogeneous linear constraints on the flattened Kraus stack.

A row is a coefficient array over the flat index ``(s, j, k)``; the stack
``b`` satisfies it when ``row @ b.ravel() == 0``. Helper rows are the first
variations of the quadratic constraints at the current iterate; external
rows come from the caller and are kept verbatim between iterations.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import BadShapeError, BadSpecError, NonFiniteError
from ..states import as_stack

PROVENANCE = ("offdiag", "diag_eq", "kraus_offdiag", "trace_preserve", "external")
MODES = ("orthogonality", "trace_preserving", "both")


@dataclass
class ConstraintSet:
    """Constraint rows with a provenance tag per row."""

    dim: int
    rows: np.ndarray = None
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        if self.rows is None:
            self.rows = np.zeros((0, self.dim))
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, self.dim)
        if not np.all(np.isfinite(self.rows)):
            raise NonFiniteError("constraint rows must be finite")
        if isinstance(self.provenance, str):
            self.provenance = [self.provenance] * len(self.rows)
        self.provenance = list(self.provenance)
        if len(self.provenance) != len(self.rows):
            raise BadShapeError("one provenance tag per row is required")
        for tag in self.provenance:
            if tag not in PROVENANCE:
                raise BadSpecError(f"unknown provenance tag {tag!r}")

    def __len__(self):
        return len(self.rows)

    def __add__(self, other: "ConstraintSet") -> "ConstraintSet":
        if other.dim != self.dim:
            raise BadShapeError(f"dimension mismatch {self.dim} vs {other.dim}")
        return ConstraintSet(
            self.dim, np.vstack([self.rows, other.rows]), self.provenance + other.provenance
        )

    def select(self, tag: str) -> "ConstraintSet":
        keep = [i for i, t in enumerate(self.provenance) if t == tag]
        return ConstraintSet(self.dim, self.rows[keep], [tag] * len(keep))

    def evaluate(self, b) -> np.ndarray:
        """Row values ``C @ b.ravel()``."""
        x = as_stack(b).ravel()
        if x.size != self.dim:
            raise BadShapeError(f"operator size {x.size} does not match {self.dim}")
        return self.rows @ x


def external(rows, dim=None) -> ConstraintSet:
    """Wrap caller-supplied rows as external constraints."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if dim is None:
        dim = rows.shape[1]
    return ConstraintSet(dim, rows, "external")


def _orthogonality_rows(b):
    n_s, d, n = b.shape
    rows, tags = [], []
    for j in range(d):
        for jp in range(j):
            r = np.zeros_like(b)
            r[:, j, :] = b[:, jp, :]
            r[:, jp, :] += b[:, j, :]
            rows.append(r.ravel())
            tags.append("offdiag")
    for j in range(1, d):
        r = np.zeros_like(b)
        r[:, j, :] = b[:, j, :]
        r[:, j - 1, :] = -b[:, j - 1, :]
        rows.append(r.ravel())
        tags.append("diag_eq")
    return rows, tags


def _trace_rows(b):
    n_s, d, n = b.shape
    rows, tags = [], []
    for k in range(n):
        for kp in range(k):
            r = np.zeros_like(b)
            r[:, :, k] = b[:, :, kp]
            r[:, :, kp] += b[:, :, k]
            rows.append(r.ravel())
            tags.append("trace_preserve")
    for k in range(1, n):
        r = np.zeros_like(b)
        r[:, :, k] = b[:, :, k]
        r[:, :, k - 1] = -b[:, :, k - 1]
        rows.append(r.ravel())
        tags.append("trace_preserve")
    return rows, tags


def _gauge_rows(b):
    n_s = b.shape[0]
    rows, tags = [], []
    for s in range(n_s):
        for sp in range(s):
            r = np.zeros_like(b)
            r[s] = b[sp]
            r[sp] = b[s]
            rows.append(r.ravel())
            tags.append("kraus_offdiag")
    return rows, tags


def helper_constraints(b, mode: str = "orthogonality") -> ConstraintSet:
    """First variations of the quadratic constraints at ``b``.

    ``orthogonality``: ``D(D-1)/2`` off-diagonal rows and ``D-1`` rows
    equating consecutive diagonal entries of ``sum_s B_s B_s^T``.
    ``trace_preserving``: the same for ``sum_s B_s^T B_s``, i.e.
    ``(n-1)(n+2)/2`` rows. ``both`` concatenates the two. Every mode adds
    ``n_s(n_s-1)/2`` rows for the Kraus cross traces.

    Each row vanishes on ``b`` whenever ``b`` satisfies the corresponding
    quadratic constraint; the rows may be linearly dependent.
    """
    if mode not in MODES:
        raise BadSpecError(f"unknown constraint mode {mode!r}")
    b = as_stack(b)
    if not np.all(np.isfinite(b)):
        raise NonFiniteError("operator must be finite")
    rows, tags = [], []
    if mode in ("orthogonality", "both"):
        r, t = _orthogonality_rows(b)
        rows += r
        tags += t
    if mode in ("trace_preserving", "both"):
        r, t = _trace_rows(b)
        rows += r
        tags += t
    r, t = _gauge_rows(b)
    rows += r
    tags += t
    return ConstraintSet(b.size, np.array(rows).reshape(-1, b.size), tags)


def superop_rows(s, levels, n_s: int = 1) -> ConstraintSet:
    """External rows ``<. |S| U> = 0`` for each prior level ``U``, repeated per Kraus block."""
    out = ConstraintSet(n_s * s.D * s.n)
    for u in levels:
        su = s.apply(u).ravel()
        for blk in range(n_s):
            r = np.zeros((n_s, su.size))
            r[blk] = su
            out = out + external(r.ravel()[None, :])
    return out


def plain_rows(levels, n_s: int = 1) -> ConstraintSet:
    """External rows ``<. | U> = 0`` (plain inner product) for each prior level."""
    levels = [as_stack(u)[0].ravel() for u in levels]
    dim = n_s * (levels[0].size if levels else 0)
    out = ConstraintSet(dim)
    for u in levels:
        for blk in range(n_s):
            r = np.zeros((n_s, u.size))
            r[blk] = u
            out = out + external(r.ravel()[None, :])
    return out

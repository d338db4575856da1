"""The superoperator tensor ``S[j,k; j',k']`` of a quadratic total fidelity.

``S`` is stored as a symmetric ``(D*n, D*n)`` matrix over the flattened
index ``j*n + k``; a single block ``u`` of shape ``(D, n)`` then enters as
the vector ``u.ravel()`` and the total fidelity is
``sum_s b_s.ravel() @ S @ b_s.ravel()``.
"""

import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import matfun
from .errors import BadLevelError, BadShapeError, BadSpecError
from .states import KL_EIGEN_FLOOR, MappingDataset, as_stack

KINDS = (
    "plain",
    "sqrt",
    "log_entropy",
    "vec_normalized",
    "nrho2_normalized",
    "pure_vectors",
    "power",
)

# superoperator kind -> matching dataset-level fidelity kind
DATASET_KIND = {
    "plain": "rho_sigma",
    "pure_vectors": "rho_sigma",
    "sqrt": "sqrt",
    "log_entropy": "log",
    "vec_normalized": "vec",
    "nrho2_normalized": "nrho2",
}

SYMMETRY_TOL = 1e-12

_POWER_RE = re.compile(r"^power\(\s*([^,]+)\s*,\s*([^)]+)\s*\)$")


def parse_kind(kind):
    """Split a kind string into ``(tag, (p, q))``.

    ``"power(p,q)"`` uses the matrix powers ``varrho**p (x) rho**q``; the
    exponent pair must satisfy ``p + q = 1`` or be ``(1, 1)``.
    """
    m = _POWER_RE.match(kind)
    if m:
        p, q = float(m.group(1)), float(m.group(2))
        if p < 0 or q < 0 or not (abs(p + q - 1.0) < 1e-12 or (p == 1.0 and q == 1.0)):
            raise BadSpecError(f"power exponents ({p}, {q}) must be non-negative with p+q=1")
        return "power", (p, q)
    if kind not in KINDS or kind == "power":
        raise BadSpecError(f"unknown superoperator kind {kind!r}")
    return kind, None


def _psd_power(a, p):
    if p == 1.0:
        return a
    if p == 0.0:
        return np.eye(a.shape[0])
    w, v = matfun.eigh(a)
    # same rounding-level clamp as sqrtm_psd so power(1/2, 1/2) == sqrt
    w = np.where(w <= w.size * np.finfo(float).eps * np.max(np.abs(w)), 0.0, w)
    r = (v * w**p) @ v.T
    return 0.5 * (r + r.T)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Symmetric superoperator over ``D x n`` mapping operators."""

    D: int
    n: int
    matrix: np.ndarray
    kind: str = "plain"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        dim = self.D * self.n
        if m.shape != (dim, dim):
            raise BadShapeError(f"matrix shape {m.shape} does not match D*n={dim}")
        if not np.all(np.isfinite(m)):
            raise BadSpecError("superoperator has non-finite entries")
        if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(m))):
            raise BadSpecError("superoperator matrix is not symmetric")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    @property
    def is_observation_count(self) -> bool:
        """Whether the total fidelity counts observations (false for the entropy kind)."""
        return self.kind != "log_entropy"

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def tensor(self) -> np.ndarray:
        """Rank-4 view ``S[j, k, j', k']``."""
        return self.matrix.reshape(self.D, self.n, self.D, self.n)

    def _flat(self, b):
        b = as_stack(b)
        if b.shape[1:] != (self.D, self.n):
            raise BadShapeError(f"operator shape {b.shape[1:]} does not match ({self.D}, {self.n})")
        return b.reshape(b.shape[0], -1)

    def total_fidelity(self, b) -> float:
        """``sum_s <B_s|S|B_s>``."""
        x = self._flat(b)
        return float(np.einsum("si,ij,sj->", x, self.matrix, x))

    def apply(self, u) -> np.ndarray:
        """``(S U)[j, k] = sum S[j,k; j',k'] u[j', k']`` for a single ``D x n`` block."""
        x = self._flat(u)
        if x.shape[0] != 1:
            raise BadShapeError("apply expects a single block")
        return (self.matrix @ x[0]).reshape(self.D, self.n)

    def inner(self, a, b) -> float:
        """Bilinear form ``<A|S|B>`` of two single blocks."""
        x, y = self._flat(a), self._flat(b)
        if x.shape[0] != 1 or y.shape[0] != 1:
            raise BadShapeError("inner expects single blocks")
        return float(x[0] @ self.matrix @ y[0])

    def to_dict(self) -> dict:
        return {"D": self.D, "n": self.n, "kind": self.kind, "data": self.matrix.ravel().tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Superoperator":
        d, n = int(doc["D"]), int(doc["n"])
        data = np.asarray(doc["data"], dtype=float).reshape(d * n, d * n)
        return cls(d, n, data, doc.get("kind", "plain"))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Superoperator":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _kron_sum(weights, out_mats, in_mats, d, n):
    # sum_l w_l out_l (x) in_l via one GEMM over the record index
    m = len(weights)
    a = (weights[:, None] * out_mats.reshape(m, d * d)).T @ in_mats.reshape(m, n * n)
    return a.reshape(d, d, n, n).transpose(0, 2, 1, 3).reshape(d * n, d * n)


def build(dataset: MappingDataset, kind: str = "plain") -> Superoperator:
    """Superoperator of a dataset for a given fidelity proxy.

    ``plain``: ``sum w varrho (x) rho``; ``sqrt``: the same with matrix
    square roots; ``log_entropy``: ``varrho (x) ln rho``; ``vec_normalized``
    and ``nrho2_normalized`` rescale each record's weight by
    ``1/(|varrho|_F |rho|_F)`` and ``1/Tr varrho^2``; ``pure_vectors``
    requires rank-one records and uses their state vectors;
    ``power(p,q)`` uses ``varrho**p (x) rho**q``.
    """
    tag, exps = parse_kind(kind)
    d, n = dataset.D, dataset.n
    if len(dataset) == 0:
        return Superoperator(d, n, np.zeros((d * n, d * n)), kind)
    w = dataset.omega.copy()
    out_mats, in_mats = dataset.varrho, dataset.rho
    if tag == "sqrt":
        out_mats = np.array([matfun.sqrtm_psd(v) for v in out_mats])
        in_mats = np.array([matfun.sqrtm_psd(r) for r in in_mats])
    elif tag == "power":
        p, q = exps
        out_mats = np.array([_psd_power(v, p) for v in out_mats])
        in_mats = np.array([_psd_power(r, q) for r in in_mats])
    elif tag == "log_entropy":
        # a partially unitary map cannot raise the rank: such records have
        # output weight where ln(rho) is only defined through the floor
        bad = int(np.sum(_ranks(dataset.varrho) > _ranks(dataset.rho)))
        if bad:
            warnings.warn(f"{bad} records have output support outside the input support", stacklevel=2)
        in_mats = np.array([matfun.logm_psd(r, KL_EIGEN_FLOOR) for r in in_mats])
    elif tag == "vec_normalized":
        w = w / (np.sqrt(np.einsum("lij,lij->l", out_mats, out_mats)) * np.sqrt(np.einsum("lij,lij->l", in_mats, in_mats)))
    elif tag == "nrho2_normalized":
        w = w / np.einsum("lij,lij->l", out_mats, out_mats)
    elif tag == "pure_vectors":
        f, x = _pure_vectors(out_mats), _pure_vectors(in_mats)
        return build_from_vectors(f, x, w)
    return Superoperator(d, n, _kron_sum(w, out_mats, in_mats, d, n), kind)


def _ranks(mats, tol=1e-10):
    return np.array([int(np.sum(np.linalg.eigvalsh(a) > tol)) for a in mats])


def _pure_vectors(mats, tol=1e-10):
    vecs = []
    for a in mats:
        wv, v = np.linalg.eigh(a)
        if wv[-2:-1].size and wv[-2] > tol:
            raise BadSpecError("pure_vectors requires rank-one density matrices")
        vecs.append(v[:, -1] * np.sqrt(wv[-1]))
    return np.array(vecs)


def build_from_vectors(f, x, omega=None) -> Superoperator:
    """``S = sum_l omega_l (f_l (x) x_l)(f_l (x) x_l)^T`` from pure-state vectors."""
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    m = len(f)
    omega = np.ones(m) if omega is None else np.asarray(omega, dtype=float)
    z = np.einsum("lj,lk->ljk", f, x).reshape(m, -1)
    return Superoperator(f.shape[1], x.shape[1], (omega[:, None] * z).T @ z, "pure_vectors")


def approx_from_hierarchy(levels, s: Superoperator, tol: float = 1e-12) -> Superoperator:
    """``sum_s (1/F_s) |S U_s><U_s S|`` over ``(U_s, F_s)`` pairs."""
    acc = np.zeros_like(s.matrix)
    for u, f in levels:
        if f <= tol * max(1.0, s.norm):
            raise BadLevelError(f"level fidelity {f!r} is not positive")
        su = s.apply(u).ravel()
        acc += np.outer(su, su) / f
    return Superoperator(s.D, s.n, acc, s.kind)

"""Density matrices, channels, and closeness measures.

Mapping operators are stored as float arrays of shape ``(n_s, D, n)``: a
stack of ``n_s`` rectangular Kraus blocks mapping the ``n``-dimensional
input space to the ``D``-dimensional output space. A 2-D ``(D, n)`` array
is accepted anywhere a single-block stack is expected.
"""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import matfun
from .errors import (
    BadRankError,
    BadShapeError,
    BadSpecError,
    InvalidDensityError,
    NonFiniteError,
    ZeroWeightsError,
)

DENSITY_TOL = 1e-10
KL_EIGEN_FLOOR = 1e-12

CLOSENESS_KINDS = ("rho_sigma", "prop", "prop_overlap", "corr", "vec", "nrho2", "kl")
DATASET_KINDS = CLOSENESS_KINDS + ("sqrt", "log")


def as_stack(b) -> np.ndarray:
    """View a mapping operator as a ``(n_s, D, n)`` float array."""
    b = np.asarray(b, dtype=float)
    if b.ndim == 2:
        b = b[None]
    if b.ndim != 3:
        raise BadShapeError(f"mapping operator must be 2-D or 3-D, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise NonFiniteError("mapping operator has non-finite entries")
    return b


def validate_density(a, tol: float = DENSITY_TOL, unit_trace: bool = True) -> np.ndarray:
    """Symmetrize ``a`` and check unit trace and positivity within ``tol``.

    With ``unit_trace=False`` the trace may lie anywhere in ``[0, 1]``, as
    for the images of a trace-decreasing map.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidDensityError(f"density matrix must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=tol):
        raise InvalidDensityError("density matrix is not symmetric")
    a = matfun.symmetrize(a)
    tr = np.trace(a)
    if unit_trace and abs(tr - 1.0) > tol:
        raise InvalidDensityError(f"trace {tr!r} differs from 1")
    if not unit_trace and not -tol <= tr <= 1.0 + tol:
        raise InvalidDensityError(f"trace {tr!r} differs from 1")
    w = np.linalg.eigvalsh(a)
    if w[0] < -tol:
        raise InvalidDensityError(f"negative eigenvalue {w[0]:.3e}")
    return a


def random_density(n: int, n_r: int, rng: np.random.Generator) -> np.ndarray:
    """Random real density matrix of rank ``n_r`` built from Gaussian vectors."""
    if not 1 <= n_r <= n:
        raise BadRankError(f"rank n_r={n_r} outside [1, {n}]")
    v = rng.standard_normal((n_r, n))
    rho = v.T @ v
    rho = 0.5 * (rho + rho.T)
    return rho / np.trace(rho)


def random_partial_unitary(d_out: int, d_in: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``(1, d_out, d_in)`` operator with orthonormal rows (Haar on the Stiefel manifold)."""
    if d_out > d_in:
        raise BadShapeError(f"d_out={d_out} exceeds d_in={d_in}")
    q, r = np.linalg.qr(rng.standard_normal((d_in, d_out)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    return q.T[None].copy()


def random_kraus_channel(d_out: int, d_in: int, n_s: int, rng: np.random.Generator) -> np.ndarray:
    """Random trace-preserving Kraus stack.

    Gaussian blocks are made trace preserving with the inverse-square-root
    column-Gram adjustment. Raises ``DegenerateGramError`` when ``n_s`` is
    below ``min_kraus_rank(d_out, d_in)``.
    """
    from .qcqp.adjust import adjust_trace_preserving

    b = rng.standard_normal((n_s, d_out, d_in))
    return adjust_trace_preserving(b)


def apply_channel(b, a) -> np.ndarray:
    """``sum_s B_s a B_s^T``."""
    b = as_stack(b)
    a = np.asarray(a, dtype=float)
    if a.shape != (b.shape[2], b.shape[2]):
        raise BadShapeError(f"operand shape {a.shape} does not match channel input dim {b.shape[2]}")
    out = np.einsum("sjk,kq,siq->ji", b, a, b)
    if np.array_equal(a, a.T):
        out = 0.5 * (out + out.T)
    return out


def trace_channel(n: int) -> np.ndarray:
    """Kraus stack ``B_s = |0><x_s|`` over the standard basis; maps ``a`` to ``[[Tr a]]``."""
    return np.eye(n)[:, None, :].copy()


@dataclass
class RankOneChannelSpec:
    """Two orthonormal frames and a column-normalized mapping matrix ``m`` (``D x n``)."""

    basis_in: np.ndarray
    basis_out: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        self.basis_in = np.asarray(self.basis_in, dtype=float)
        self.basis_out = np.asarray(self.basis_out, dtype=float)
        self.m = np.asarray(self.m, dtype=float)


def rank_one_channel(spec: RankOneChannelSpec) -> np.ndarray:
    """Stack of ``D*n`` rank-one blocks ``|f_j> m_jk <x_k|``, index ``s = j*n + k``."""
    f, x, m = spec.basis_out, spec.basis_in, spec.m
    d_out, d_in = m.shape
    if f.shape != (d_out, d_out) or x.shape != (d_in, d_in):
        raise BadSpecError("basis shapes do not match the mapping matrix")
    for name, basis in (("basis_in", x), ("basis_out", f)):
        if np.max(np.abs(basis.T @ basis - np.eye(basis.shape[0]))) > DENSITY_TOL:
            raise BadSpecError(f"{name} is not orthonormal")
    norms = np.sum(m**2, axis=0)
    if np.max(np.abs(norms - 1.0)) > DENSITY_TOL:
        raise BadSpecError(f"columns of m are not normalized: {norms}")
    # basis vectors are the columns of f and x
    blocks = np.einsum("aj,jk,bk->jkab", f, m, x)
    return blocks.reshape(d_out * d_in, d_out, d_in)


def min_kraus_rank(d_out: int, d_in: int) -> int:
    """The bound ``n - D + 1`` on the Kraus rank of a trace-preserving ``D x n`` channel.

    It is tight for ``D`` in ``{1, n-1, n}``. In general ``sum B^T B`` can
    reach full rank once ``n_s * D >= n``, so fewer blocks may suffice.
    """
    if d_out > d_in:
        raise BadShapeError(f"d_out={d_out} exceeds d_in={d_in}")
    return max(1, d_in - d_out + 1)


def orthonormality_violation(b) -> float:
    """``max |sum_s B_s B_s^T - I|``."""
    b = as_stack(b)
    g = np.einsum("sjk,sik->ji", b, b)
    return float(np.max(np.abs(g - np.eye(b.shape[1]))))


def trace_violation(b) -> float:
    """``max |sum_s B_s^T B_s - I|``."""
    b = as_stack(b)
    g = np.einsum("sjk,sjq->kq", b, b)
    return float(np.max(np.abs(g - np.eye(b.shape[2]))))


def gauge_violation(b) -> float:
    """Largest cross trace ``|Tr B_s B_t^T|`` over ``s != t`` (0 for a single block)."""
    b = as_stack(b)
    g = np.einsum("sjk,tjk->st", b, b)
    np.fill_diagonal(g, 0.0)
    return float(np.max(np.abs(g))) if g.size else 0.0


@dataclass
class MixedUnitaryChannel:
    """Convex combination ``sum_s p_s U_s A U_s^T`` of partially unitary channels.

    ``weights`` holds the probabilities ``p_s = |w_s|^2`` (summing to one).
    """

    weights: np.ndarray
    unitaries: list = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.unitaries = [as_stack(u)[0] for u in self.unitaries]
        if len(self.unitaries) != self.weights.size:
            raise BadShapeError("number of weights and unitaries differ")
        if np.any(self.weights < 0):
            raise ZeroWeightsError("weights must be non-negative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ZeroWeightsError(f"weights sum to {self.weights.sum()!r}, not 1")

    def kraus(self) -> np.ndarray:
        """Equivalent Kraus stack ``B_s = sqrt(p_s) U_s``."""
        return np.sqrt(self.weights)[:, None, None] * np.stack(self.unitaries)

    def apply(self, a) -> np.ndarray:
        return apply_channel(self.kraus(), a)


def random_mixed_unitary(d_out: int, d_in: int, n_s: int, rng: np.random.Generator) -> MixedUnitaryChannel:
    """``n_s`` random partial unitaries with Dirichlet(1, ..., 1) probabilities."""
    if n_s < 1:
        raise BadRankError("n_s must be at least 1")
    p = rng.dirichlet(np.ones(n_s)) if n_s > 1 else np.ones(1)
    us = [random_partial_unitary(d_out, d_in, rng)[0] for _ in range(n_s)]
    return MixedUnitaryChannel(p / p.sum(), us)


def _frob(a):
    return float(np.sqrt(np.sum(np.asarray(a) ** 2)))


def closeness(kind: str, varrho, sigma, rho=None) -> float:
    """Closeness between an observed output ``varrho`` and a predicted output ``sigma``.

    ``kind`` is one of

    * ``rho_sigma``: ``Tr varrho sigma``
    * ``prop``: ``Tr sqrt(sqrt(varrho) sigma sqrt(varrho))`` (Uhlmann root fidelity)
    * ``prop_overlap``: ``Tr sqrt(varrho) sqrt(sigma)``; equals ``prop`` only when
      the two arguments commute
    * ``corr``: ``Tr varrho sigma / sqrt(Tr varrho^2 Tr sigma^2)``
    * ``vec``: ``Tr varrho sigma / (|varrho|_F |rho|_F)``, needs the input ``rho``
    * ``nrho2``: ``Tr varrho sigma / Tr varrho^2``
    * ``kl``: relative entropy ``Tr varrho (ln varrho - ln sigma)``
    """
    varrho = np.asarray(varrho, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if varrho.shape != sigma.shape:
        raise BadShapeError(f"shape mismatch {varrho.shape} vs {sigma.shape}")
    if kind == "rho_sigma":
        return float(np.sum(varrho * sigma.T))
    if kind == "prop":
        r = matfun.sqrtm_psd(varrho)
        return float(np.trace(matfun.sqrtm_psd(r @ sigma @ r)))
    if kind == "prop_overlap":
        return float(np.sum(matfun.sqrtm_psd(varrho) * matfun.sqrtm_psd(sigma)))
    if kind == "corr":
        return float(np.sum(varrho * sigma.T) / (_frob(varrho) * _frob(sigma)))
    if kind == "vec":
        if rho is None:
            raise ValueError("kind='vec' requires the input density matrix rho")
        return float(np.sum(varrho * sigma.T) / (_frob(varrho) * _frob(rho)))
    if kind == "nrho2":
        return float(np.sum(varrho * sigma.T) / np.sum(varrho * varrho))
    if kind == "kl":
        lv = matfun.logm_psd(varrho, KL_EIGEN_FLOOR)
        ls = matfun.logm_psd(sigma, KL_EIGEN_FLOOR)
        return float(np.sum(varrho * (lv - ls)))
    raise ValueError(f"unknown closeness kind {kind!r}; expected one of {CLOSENESS_KINDS}")


def support_mismatch(varrho, rho, b=None, tol: float = 1e-10) -> bool:
    """True when ``varrho`` has weight on the (mapped) null space of ``rho``.

    Such records make logarithm-based measures ill defined: the observed
    output must vanish wherever the (mapped) input has zero eigenvalue.
    """
    sigma = rho if b is None else apply_channel(b, rho)
    w, v = np.linalg.eigh(matfun.symmetrize(sigma))
    null = v[:, w <= tol * max(w[-1], 1.0)]
    if null.shape[1] == 0:
        return False
    return bool(np.trace(null.T @ varrho @ null) > tol)


@dataclass
class MappingDataset:
    """Weighted observations ``rho[l] -> varrho[l]`` with weight ``omega[l]``.

    ``rho`` has shape ``(M, n, n)``, ``varrho`` ``(M, D, D)``, ``omega`` ``(M,)``.
    Construction validates every matrix as a density matrix.
    """

    rho: np.ndarray
    varrho: np.ndarray
    omega: np.ndarray
    validate: bool = field(default=True, repr=False)
    # outputs of a trace-decreasing map keep their sub-unit trace
    unit_trace_out: bool = True

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.varrho = np.asarray(self.varrho, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float).reshape(-1)
        if self.rho.ndim != 3 or self.varrho.ndim != 3:
            raise BadShapeError("rho and varrho must be stacks of square matrices")
        if not (len(self.rho) == len(self.varrho) == len(self.omega)):
            raise BadShapeError("rho, varrho and omega have different lengths")
        if np.any(self.omega <= 0) or not np.all(np.isfinite(self.omega)):
            raise BadSpecError("weights omega must be positive and finite")
        if self.validate:
            self.rho = np.array([validate_density(a) for a in self.rho]).reshape(self.rho.shape)
            self.varrho = np.array(
                [validate_density(a, unit_trace=self.unit_trace_out) for a in self.varrho]
            ).reshape(
                self.varrho.shape
            )

    @property
    def n(self) -> int:
        return self.rho.shape[-1]

    @property
    def D(self) -> int:
        return self.varrho.shape[-1]

    def __len__(self):
        return len(self.omega)

    @classmethod
    def empty(cls, n: int, d: int) -> "MappingDataset":
        return cls(np.zeros((0, n, n)), np.zeros((0, d, d)), np.zeros(0))

    @classmethod
    def from_channel(cls, b, rho, omega=None) -> "MappingDataset":
        """Map input densities through a Kraus stack to build an exact dataset.

        A trace-decreasing stack yields outputs with trace below one; they
        are kept as they are (no renormalization).
        """
        b = as_stack(b)
        rho = np.asarray(rho, dtype=float)
        varrho = np.array([apply_channel(b, r) for r in rho])
        if omega is None:
            omega = np.ones(len(rho))
        unit = trace_violation(b) <= DENSITY_TOL
        return cls(rho, varrho, omega, unit_trace_out=unit)

    def to_dict(self) -> dict:
        doc = {
            "n": self.n,
            "D": self.D,
            "records": [
                {"omega": float(w), "rho": r.tolist(), "varrho": v.tolist()}
                for w, r, v in zip(self.omega, self.rho, self.varrho)
            ],
        }
        if not self.unit_trace_out:
            doc["output_trace"] = "free"
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "MappingDataset":
        n, d = int(doc["n"]), int(doc["D"])
        recs = doc["records"]
        if not recs:
            return cls.empty(n, d)
        rho = np.array([r["rho"] for r in recs], dtype=float)
        varrho = np.array([r["varrho"] for r in recs], dtype=float)
        if rho.shape[1:] != (n, n) or varrho.shape[1:] != (d, d):
            raise BadShapeError("record matrices do not match declared n and D")
        unit = doc.get("output_trace", "unit") != "free"
        return cls(rho, varrho, [r["omega"] for r in recs], unit_trace_out=unit)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "MappingDataset":
        return cls.from_dict(json.loads(Path(path).read_text()))


def total_fidelity_dataset(kind: str, dataset: MappingDataset, channel) -> float:
    """``sum_l omega_l F(varrho_l, sigma_l)`` with ``sigma_l`` the channel image of ``rho_l``.

    Besides the closeness kinds, ``sqrt`` maps ``sqrt(rho)`` and compares
    with ``sqrt(varrho)`` through ``Tr``; ``log`` maps ``ln rho`` and
    returns ``sum omega Tr varrho sigma(ln rho)``.
    """
    b = as_stack(channel)
    if len(dataset) and (b.shape[1], b.shape[2]) != (dataset.D, dataset.n):
        raise BadShapeError("channel shape does not match the dataset dimensions")
    total = 0.0
    if kind == "kl" and any(
        support_mismatch(v, r, b) for r, v in zip(dataset.rho, dataset.varrho)
    ):
        warnings.warn("records with output support outside the mapped input support", stacklevel=2)
    for w, r, v in zip(dataset.omega, dataset.rho, dataset.varrho):
        if kind == "sqrt":
            f = closeness("rho_sigma", matfun.sqrtm_psd(v), apply_channel(b, matfun.sqrtm_psd(r)))
        elif kind == "log":
            f = closeness("rho_sigma", v, apply_channel(b, matfun.logm_psd(r, KL_EIGEN_FLOOR)))
        else:
            f = closeness(kind, v, apply_channel(b, r), r)
        total += w * f
    return float(total)

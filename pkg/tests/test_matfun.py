import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclearn import matfun
from qclearn.errors import DegenerateGramError, NonFiniteError, NotPSDError


def _sym(rng, n):
    a = rng.standard_normal((n, n))
    return a + a.T


def _psd(rng, n, rank=None):
    v = rng.standard_normal((rank or n, n))
    return v.T @ v


def test_eigh_diagonal_and_identity():
    w, v = matfun.eigh(np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(w, [1, 2, 3])
    assert np.allclose(np.abs(v), np.eye(3))
    w, _ = matfun.eigh(np.eye(4))
    assert np.allclose(w, 1.0)


def test_eigh_residual(rng):
    a = _sym(rng, 6)
    w, v = matfun.eigh(a)
    nrm = np.max(np.abs(a))
    assert np.max(np.abs(a @ v - v * w)) <= 1e-10 * nrm
    assert np.max(np.abs(v.T @ v - np.eye(6))) <= 1e-12
    assert np.all(np.diff(w) >= 0)


def test_eigh_rejects_nonfinite():
    with pytest.raises(NonFiniteError):
        matfun.eigh(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_sqrtm_examples(rng):
    assert np.allclose(matfun.sqrtm_psd(np.eye(3)), np.eye(3))
    assert np.allclose(matfun.sqrtm_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    a = _psd(rng, 8)
    r = matfun.sqrtm_psd(a)
    assert np.max(np.abs(r @ r - a)) <= 1e-9 * np.max(np.abs(a))
    assert np.min(np.linalg.eigvalsh(r)) >= -1e-12


def test_sqrtm_rank_deficient_is_exact_on_null_space(rng):
    a = _psd(rng, 6, rank=2)
    r = matfun.sqrtm_psd(a)
    assert np.max(np.abs(r @ r - a)) <= 1e-9 * np.max(np.abs(a))
    assert np.sum(np.linalg.eigvalsh(r) > 1e-6) == 2


def test_sqrtm_rejects_indefinite():
    with pytest.raises(NotPSDError):
        matfun.sqrtm_psd(np.diag([1.0, -0.5]))
    # tiny negatives are clamped
    r = matfun.sqrtm_psd(np.diag([1.0, -1e-14]))
    assert np.allclose(r, np.diag([1.0, 0.0]))


def test_logm_examples():
    assert np.allclose(matfun.logm_psd(np.eye(3)), 0.0)
    assert np.allclose(matfun.logm_psd(np.diag([np.e, np.e**2])), np.diag([1.0, 2.0]))
    r = matfun.logm_psd(np.diag([1.0, 0.0]), 1e-12)
    assert np.allclose(r, np.diag([0.0, np.log(1e-12)]))


def test_inv_sqrt_examples(rng):
    assert np.allclose(matfun.inv_sqrt(4 * np.eye(2)), 0.5 * np.eye(2))
    assert np.allclose(matfun.inv_sqrt(np.eye(5)), np.eye(5))
    g = _psd(rng, 5) + 0.1 * np.eye(5)
    r = matfun.inv_sqrt(g)
    assert np.max(np.abs(r @ g @ r - np.eye(5))) <= 1e-9
    # positive branch
    assert np.min(np.linalg.eigvalsh(r)) > 0


def test_inv_sqrt_degenerate(rng):
    with pytest.raises(DegenerateGramError):
        matfun.inv_sqrt(_psd(rng, 4, rank=2))


def test_gen_sym_eig(rng):
    num = _sym(rng, 6)
    w, v = matfun.gen_sym_eig(num, np.eye(6))
    assert np.allclose(w, np.linalg.eigvalsh(num))
    den = _psd(rng, 6) + np.eye(6)
    w, _ = matfun.gen_sym_eig(den, den)
    assert np.allclose(w, 1.0)
    w, v = matfun.gen_sym_eig(num, den)
    assert np.max(np.abs(num @ v - den @ v * w)) <= 1e-9 * np.max(np.abs(num))
    assert np.allclose(v.T @ den @ v, np.eye(6), atol=1e-10)


def test_gen_sym_eig_rejects_singular_den(rng):
    with pytest.raises(DegenerateGramError):
        matfun.gen_sym_eig(np.eye(3), np.diag([1.0, 1.0, 0.0]))


def test_null_space_examples(rng):
    assert np.allclose(matfun.null_space_basis(np.zeros((0, 6))), np.eye(6))
    e = np.zeros((1, 6))
    e[0, 0] = 1.0
    m = matfun.null_space_basis(e)
    assert m.shape == (6, 5)
    assert np.all(m[0] == 0)
    c = rng.standard_normal((5, 12))
    m = matfun.null_space_basis(c)
    assert m.shape == (12, 7)
    assert np.max(np.abs(c @ m)) <= 1e-10
    assert np.linalg.matrix_rank(m) == 7


def test_null_space_drops_redundant_rows(rng):
    c = rng.standard_normal((3, 8))
    c = np.vstack([c, c[0] + 2 * c[1], np.zeros(8)])
    m = matfun.null_space_basis(c)
    assert m.shape == (8, 5)
    assert np.max(np.abs(c @ m)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(2, 9), st.integers(0, 2**31 - 1))
def test_null_space_rank_property(rows, dim, seed):
    rng = np.random.default_rng(seed)
    rank = min(rows, dim)
    c = rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, dim))
    m = matfun.null_space_basis(c)
    assert m.shape[1] == dim - np.linalg.matrix_rank(c)
    assert np.max(np.abs(c @ m), initial=0.0) <= 1e-9 * max(1.0, np.max(np.abs(c)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_matrix_function_properties(n, seed):
    rng = np.random.default_rng(seed)
    a = _psd(rng, n) + 1e-3 * np.eye(n)
    w, v = matfun.eigh(a)
    assert np.max(np.abs(a - (v * w) @ v.T)) <= 1e-10 * np.max(np.abs(a))
    r = matfun.sqrtm_psd(a)
    assert np.max(np.abs(r @ r - a)) <= 1e-9 * np.max(np.abs(a))
    ri = matfun.inv_sqrt(a)
    assert np.max(np.abs(ri @ a @ ri - np.eye(n))) <= 1e-8

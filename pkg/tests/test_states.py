import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclearn import matfun, states
from qclearn.errors import (
    BadRankError,
    BadShapeError,
    BadSpecError,
    DegenerateGramError,
    InvalidDensityError,
    ZeroWeightsError,
)

from conftest import exact_dataset


def test_random_density(rng):
    r = states.random_density(3, 3, rng)
    assert abs(np.trace(r) - 1) <= 1e-12
    assert np.min(np.linalg.eigvalsh(r)) > 1e-10
    p = states.random_density(5, 1, rng)
    assert np.max(np.abs(p @ p - p)) <= 1e-10
    r = states.random_density(4, 2, rng)
    assert np.sum(np.linalg.eigvalsh(r) > 1e-10) == 2
    with pytest.raises(BadRankError):
        states.random_density(3, 4, rng)
    with pytest.raises(BadRankError):
        states.random_density(3, 0, rng)


def test_random_density_deterministic():
    a = states.random_density(4, 2, np.random.default_rng(7))
    b = states.random_density(4, 2, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_random_partial_unitary(rng):
    u = states.random_partial_unitary(1, 1, rng)
    assert abs(abs(u[0, 0, 0]) - 1) <= 1e-15
    u = states.random_partial_unitary(2, 4, rng)[0]
    assert np.max(np.abs(u @ u.T - np.eye(2))) <= 1e-12
    u = states.random_partial_unitary(5, 5, rng)[0]
    assert abs(abs(np.linalg.det(u)) - 1) <= 1e-10
    with pytest.raises(BadShapeError):
        states.random_partial_unitary(3, 2, rng)


def test_random_kraus_channel(rng):
    b = states.random_kraus_channel(1, 1, 1, rng)
    assert abs(abs(b[0, 0, 0]) - 1) <= 1e-12
    b = states.random_kraus_channel(10, 10, 3, rng)
    assert states.trace_violation(b) <= 1e-10
    with pytest.raises(DegenerateGramError):
        states.random_kraus_channel(1, 3, 2, rng)


def test_apply_channel_examples(rng):
    rho = states.random_density(4, 2, rng)
    assert np.allclose(states.apply_channel(np.eye(4), rho), rho)
    out = states.apply_channel(states.trace_channel(2), np.diag([0.3, 0.7]))
    assert np.allclose(out, [[1.0]])
    u = states.random_partial_unitary(4, 4, rng)
    psi = states.random_density(4, 1, rng)
    out = states.apply_channel(u, psi)
    assert abs(np.trace(out) - 1) <= 1e-12
    assert np.sum(np.linalg.eigvalsh(out) > 1e-10) == 1
    with pytest.raises(BadShapeError):
        states.apply_channel(u, np.eye(3))


def test_trace_channel(rng):
    assert np.allclose(states.trace_channel(1), [[[1.0]]])
    assert np.allclose(states.apply_channel(states.trace_channel(3), np.eye(3)), [[3.0]])
    a = rng.standard_normal((4, 4))
    a = a + a.T
    assert abs(states.apply_channel(states.trace_channel(4), a)[0, 0] - np.trace(a)) <= 1e-12


def test_rank_one_channel(rng):
    spec = states.RankOneChannelSpec(np.eye(3), np.eye(1), np.ones((1, 3)))
    assert np.allclose(states.rank_one_channel(spec), states.trace_channel(3))
    spec = states.RankOneChannelSpec(np.eye(2), np.eye(2), np.eye(2))
    b = states.rank_one_channel(spec)
    assert states.trace_violation(b) <= 1e-10
    q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    m = rng.standard_normal((2, 3))
    m /= np.linalg.norm(m, axis=0)
    b = states.rank_one_channel(states.RankOneChannelSpec(q, np.eye(2), m))
    assert b.shape == (6, 2, 3)
    assert all(np.linalg.matrix_rank(blk) == 1 for blk in b)
    assert states.trace_violation(b) <= 1e-10
    with pytest.raises(BadSpecError):
        states.rank_one_channel(states.RankOneChannelSpec(np.eye(2), np.eye(2), 2 * np.eye(2)))


def test_min_kraus_rank():
    assert states.min_kraus_rank(4, 4) == 1
    assert states.min_kraus_rank(1, 3) == 3
    assert states.min_kraus_rank(2, 5) == 4


def test_closeness_examples(rng):
    a = states.random_density(4, 3, rng)
    assert abs(states.closeness("prop", a, a) - 1) <= 1e-10
    assert abs(states.closeness("rho_sigma", np.eye(3) / 3, np.eye(3) / 3) - 1 / 3) <= 1e-15
    assert abs(states.closeness("corr", a, a) - 1) <= 1e-12
    assert abs(states.closeness("kl", a, a)) <= 1e-9
    assert abs(states.closeness("nrho2", a, a) - 1) <= 1e-12
    with pytest.raises(ValueError):
        states.closeness("vec", a, a)
    with pytest.raises(ValueError):
        states.closeness("bogus", a, a)


def test_prop_versus_overlap(rng):
    # the two fidelity forms agree for commuting arguments only
    v = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    a = v @ np.diag([0.5, 0.3, 0.2]) @ v.T
    b = v @ np.diag([0.1, 0.6, 0.3]) @ v.T
    assert abs(states.closeness("prop", a, b) - states.closeness("prop_overlap", a, b)) <= 1e-12
    c = states.random_density(3, 3, rng)
    d = states.random_density(3, 3, rng)
    assert states.closeness("prop", c, d) >= states.closeness("prop_overlap", c, d) - 1e-12


def test_pure_output_closeness_relations(rng):
    f = states.random_density(4, 1, rng)
    s = states.random_density(4, 3, rng)
    rs = states.closeness("rho_sigma", f, s)
    assert abs(rs - states.closeness("nrho2", f, s)) <= 1e-8
    assert abs(states.closeness("prop", f, s) - np.sqrt(rs)) <= 1e-8


def test_unitary_invariants(rng):
    u = states.random_partial_unitary(5, 5, rng)
    rho = states.random_density(5, 2, rng)
    sig = states.apply_channel(u, rho)
    assert abs(np.sum(sig * sig) - np.sum(rho * rho)) <= 1e-10
    var = states.random_density(5, 3, rng)
    assert abs(states.closeness("vec", var, sig, rho) - states.closeness("corr", var, sig)) <= 1e-10
    a = states.random_density(5, 4, rng) * 3
    lhs = matfun.sqrtm_psd(states.apply_channel(u, a))
    rhs = states.apply_channel(u, matfun.sqrtm_psd(a))
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_trace_preserving_conserves_trace(rng):
    b = states.random_kraus_channel(3, 5, 3, rng)
    a = rng.standard_normal((5, 5))
    a = a + a.T
    assert abs(np.trace(states.apply_channel(b, a)) - np.trace(a)) <= 1e-10


def test_mixed_unitary_channel(rng):
    us = [states.random_partial_unitary(4, 4, rng) for _ in range(3)]
    ch = states.MixedUnitaryChannel([0.2, 0.3, 0.5], us)
    a = rng.standard_normal((4, 4))
    a = a + a.T
    assert abs(np.trace(ch.apply(a)) - np.trace(a)) <= 1e-12
    assert np.allclose(ch.apply(a), sum(p * u[0] @ a @ u[0].T for p, u in zip(ch.weights, us)))
    with pytest.raises(ZeroWeightsError):
        states.MixedUnitaryChannel([0.5, 0.6], us[:2])
    m = states.random_mixed_unitary(3, 3, 4, rng)
    assert abs(m.weights.sum() - 1) <= 1e-12 and m.kraus().shape == (4, 3, 3)


def test_validate_density():
    with pytest.raises(InvalidDensityError):
        states.validate_density(np.diag([0.5, 0.6]))
    with pytest.raises(InvalidDensityError):
        states.validate_density(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidDensityError):
        states.validate_density(np.array([[0.5, 0.1], [0.0, 0.5]]))
    states.validate_density(np.diag([0.3, 0.2]), unit_trace=False)


def test_total_fidelity_dataset(rng):
    ds, b = exact_dataset(4, 4, 10, 2, rng, states.random_kraus_channel(4, 4, 2, rng))
    assert abs(states.total_fidelity_dataset("prop", ds, b) - 10) <= 1e-8
    ds, u = exact_dataset(4, 4, 10, 3, rng)
    assert abs(states.total_fidelity_dataset("sqrt", ds, u) - 10) <= 1e-8
    empty = states.MappingDataset.empty(4, 4)
    assert states.total_fidelity_dataset("rho_sigma", empty, u) == 0.0


def test_kl_support_warning(rng):
    rho = np.diag([1.0, 0.0])
    var = np.diag([0.5, 0.5])
    ds = states.MappingDataset(rho[None], var[None], [1.0])
    with pytest.warns(UserWarning):
        states.total_fidelity_dataset("kl", ds, np.eye(2))


def test_dataset_roundtrip(tmp_path, rng):
    ds, _ = exact_dataset(3, 2, 4, 2, rng)
    p = tmp_path / "d.json"
    ds.save(p)
    doc = json.loads(p.read_text())
    assert set(doc) >= {"n", "D", "records"} and doc["n"] == 3 and doc["D"] == 2
    back = states.MappingDataset.load(p)
    assert np.array_equal(back.rho, ds.rho) and np.array_equal(back.varrho, ds.varrho)
    assert back.unit_trace_out == ds.unit_trace_out


def test_dataset_rejects_bad_records(rng):
    r = states.random_density(3, 1, rng)
    with pytest.raises(BadShapeError):
        states.MappingDataset(r[None], r[None], [1.0, 2.0])
    with pytest.raises(BadSpecError):
        states.MappingDataset(r[None], r[None], [0.0])
    with pytest.raises(InvalidDensityError):
        states.MappingDataset(r[None], 2 * r[None], [1.0])


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_kraus_apply_properties(d, extra, seed):
    rng = np.random.default_rng(seed)
    n = d + extra - 1
    b = states.random_kraus_channel(d, n, states.min_kraus_rank(d, n) + 1, rng)
    rho = states.random_density(n, max(1, n // 2), rng)
    out = states.apply_channel(b, rho)
    assert abs(np.trace(out) - 1) <= 1e-10
    assert np.min(np.linalg.eigvalsh(out)) >= -1e-12
    assert np.array_equal(out, out.T)

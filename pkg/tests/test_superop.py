import numpy as np
import pytest

from qclearn import states, superop
from qclearn.errors import BadLevelError, BadShapeError, BadSpecError, NotPSDError
from qclearn.qcqp import adjust_canonical

from conftest import exact_dataset, random_superop


def _pure(v):
    v = np.asarray(v, dtype=float)
    return np.outer(v, v)


def test_single_pure_record_is_rank_one(rng):
    f = rng.standard_normal(3)
    f /= np.linalg.norm(f)
    x = rng.standard_normal(4)
    x /= np.linalg.norm(x)
    ds = states.MappingDataset(_pure(x)[None], _pure(f)[None], [1.0])
    s = superop.build(ds, "plain")
    z = np.kron(f, x)
    assert np.max(np.abs(s.matrix - np.outer(z, z))) <= 1e-12
    assert np.linalg.matrix_rank(s.matrix, tol=1e-10) == 1
    assert np.max(np.abs(superop.build(ds, "sqrt").matrix - s.matrix)) <= 1e-12


def test_plain_trace_factorization(rng):
    ds, _ = exact_dataset(4, 3, 3, 3, rng, states.random_kraus_channel(3, 4, 2, rng))
    s = superop.build(ds, "plain")
    assert np.max(np.abs(s.matrix - s.matrix.T)) <= 1e-12
    assert abs(np.trace(s.matrix) - ds.omega.sum()) <= 1e-12


def test_pure_vectors_matches_plain(rng):
    ds, _ = exact_dataset(4, 4, 6, 1, rng)
    a = superop.build(ds, "plain").matrix
    b = superop.build(ds, "pure_vectors").matrix
    assert np.max(np.abs(a - b)) <= 1e-12
    mixed, _ = exact_dataset(4, 4, 2, 2, rng)
    with pytest.raises(BadSpecError):
        superop.build(mixed, "pure_vectors")


def test_power_family(rng):
    ds, _ = exact_dataset(3, 3, 5, 2, rng, states.random_kraus_channel(3, 3, 2, rng))
    assert np.max(np.abs(superop.build(ds, "power(0.5,0.5)").matrix - superop.build(ds, "sqrt").matrix)) <= 1e-12
    assert np.max(np.abs(superop.build(ds, "power(1,1)").matrix - superop.build(ds, "plain").matrix)) <= 1e-12
    for bad in ("power(0.7,0.7)", "power(-0.5,1.5)", "power", "cubic"):
        with pytest.raises(BadSpecError):
            superop.parse_kind(bad)


def test_psd_kinds(rng):
    ds, _ = exact_dataset(4, 3, 8, 2, rng, states.random_kraus_channel(3, 4, 2, rng))
    for kind in ("plain", "sqrt", "vec_normalized", "nrho2_normalized"):
        s = superop.build(ds, kind)
        assert np.min(np.linalg.eigvalsh(s.matrix)) >= -1e-10 * s.norm


def test_empty_dataset_is_zero():
    s = superop.build(states.MappingDataset.empty(3, 2), "sqrt")
    assert s.matrix.shape == (6, 6) and not np.any(s.matrix)


@pytest.mark.filterwarnings("ignore:.*support")
@pytest.mark.parametrize("kind", ["plain", "sqrt", "log_entropy", "vec_normalized", "nrho2_normalized"])
def test_dual_path_fidelity(rng, kind):
    # quadratic form against the record-by-record evaluation
    ds, _ = exact_dataset(4, 3, 7, 2, rng, states.random_kraus_channel(3, 4, 2, rng))
    s = superop.build(ds, kind)
    u = states.random_partial_unitary(3, 4, rng)
    a = s.total_fidelity(u)
    b = states.total_fidelity_dataset(superop.DATASET_KIND[kind], ds, u)
    assert abs(a - b) <= 1e-8 * max(1.0, abs(b))


def test_log_entropy_is_not_a_count(rng):
    ds, _ = exact_dataset(3, 3, 4, 3, rng)
    assert not superop.build(ds, "log_entropy").is_observation_count
    assert superop.build(ds, "sqrt").is_observation_count


def test_total_fidelity_examples(rng):
    s = superop.Superoperator(3, 3, np.zeros((9, 9)))
    assert s.total_fidelity(rng.standard_normal((3, 3))) == 0.0
    u = states.random_partial_unitary(3, 3, rng)[0]
    x = rng.standard_normal(3)
    x /= np.linalg.norm(x)
    s1 = superop.build_from_vectors([u @ x], [x])
    assert abs(s1.total_fidelity(u) - 1) <= 1e-12
    with pytest.raises(BadShapeError):
        s1.total_fidelity(np.eye(2))


def test_apply_and_inner(rng):
    s = superop.Superoperator(2, 3, np.eye(6))
    u = rng.standard_normal((2, 3))
    assert np.array_equal(s.apply(u), u)
    a = rng.standard_normal((2, 3))
    r1 = superop.Superoperator(2, 3, np.outer(a.ravel(), a.ravel()))
    assert np.allclose(r1.apply(u), a * np.sum(a * u))
    s = random_superop(3, 4, rng)
    a, b = rng.standard_normal((2, 3, 4))
    assert abs(s.inner(a, b) - s.inner(b, a)) <= 1e-12 * s.norm * 100
    assert abs(s.inner(a, a) - s.total_fidelity(a)) <= 1e-12 * abs(s.total_fidelity(a))
    assert superop.Superoperator(3, 4, np.zeros((12, 12))).inner(a, b) == 0.0
    with pytest.raises(BadShapeError):
        s.apply(np.zeros((4, 3)))


def test_fidelity_gauge_invariant(rng):
    s = random_superop(3, 3, rng)
    b = states.random_kraus_channel(3, 3, 3, rng)
    c = adjust_canonical(b, s)
    f0, f1 = s.total_fidelity(b), s.total_fidelity(c)
    assert abs(f0 - f1) <= 1e-12 * abs(f0)


def test_rejects_asymmetric():
    a = np.arange(16.0).reshape(4, 4)
    with pytest.raises(ValueError):
        superop.Superoperator(2, 2, a)


def test_sqrt_rejects_non_psd():
    r = np.diag([1.2, -0.2])
    with pytest.raises((NotPSDError, ValueError)):
        ds = states.MappingDataset(r[None], r[None], [1.0])
        superop.build(ds, "sqrt")


def test_json_roundtrip(tmp_path, rng):
    s = random_superop(2, 3, rng)
    p = tmp_path / "s.json"
    s.save(p)
    t = superop.Superoperator.load(p)
    assert np.array_equal(t.matrix, s.matrix) and (t.D, t.n, t.kind) == (s.D, s.n, s.kind)


def test_approx_from_hierarchy_basic(rng):
    s = random_superop(2, 2, rng)
    assert not np.any(superop.approx_from_hierarchy([], s).matrix)
    u = states.random_partial_unitary(2, 2, rng)[0]
    f = s.total_fidelity(u)
    a = superop.approx_from_hierarchy([(u, f)], s)
    assert abs(a.total_fidelity(u) - f) <= 1e-9 * f
    with pytest.raises(BadLevelError):
        superop.approx_from_hierarchy([(u, 0.0)], s)

import itertools
import math

import numpy as np
import pytest

from hyperlab import design_bias as db
from hyperlab import sphere_moments as sm


@pytest.fixture(scope="module")
def ico():
    return db.icosahedron_povm()


@pytest.fixture(scope="module")
def mub():
    return db.mub_qubit_povm()


def computational_basis(n=2):
    return db.Povm(n, tuple(np.diag(np.eye(n)[i]) for i in range(n)))


def naive_product_bias(m, d):
    """Sum over outcome tuples of |tr((M_i1 (x) ... (x) M_ik) Delta)|, by explicit Kronecker products."""
    total = 0.0
    for ops in itertools.product(*[p.operators for p in m.parties]):
        big = ops[0]
        for o in ops[1:]:
            big = np.kron(big, o)
        total += abs(np.trace(big @ d.delta).real)
    return total


def test_povm_invariants():
    with pytest.raises(ValueError):
        db.Povm(2, (np.eye(2) * 0.5,))
    with pytest.raises(ValueError):
        db.Povm(2, (np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])))
    m = computational_basis(3)
    assert m.rank_one
    np.testing.assert_allclose(m.weights, [1 / 3] * 3)
    assert not db.Povm(2, (np.eye(2) / 2, np.eye(2) / 2)).rank_one


def test_check_design_examples(mub, ico):
    assert db.check_design(computational_basis(), 1).holds
    assert not db.check_design(computational_basis(), 2).holds
    r2 = db.check_design(mub, 2)
    assert r2.holds
    r4 = db.check_design(mub, 4)
    assert not r4.holds and r4.extra["design_order"] == 3
    assert r4.extra["deviations"][4] > 1e-3
    r = db.check_design(ico, 4)
    assert r.holds and r.extra["design_order"] == 4
    with pytest.raises(db.DesignError):
        db.check_design(db.Povm(2, (np.eye(2) / 2, np.eye(2) / 2)), 2)


def test_design_implies_lower_designs(mub, ico):
    for m in (mub, ico, computational_basis(), computational_basis(3)):
        for t in range(1, 5):
            if db.check_design(m, t).holds:
                for s in range(1, t):
                    assert db.check_design(m, s).holds


def test_random_basis_is_only_a_one_design():
    rng = np.random.default_rng(0)
    u, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    m = db.Povm.from_vectors(u.T, [1, 1, 1])
    assert db.design_order(m) == 1


def test_measurement_bias_examples(ico):
    zero = sm.StateDifference.from_raw(2, 1, np.zeros((2, 2)))
    assert db.measurement_bias(ico, zero) == 0
    zh = db.z_half_power(1)
    assert db.measurement_bias(computational_basis(), zh) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        db.measurement_bias(computational_basis(3), zh)


def test_bias_below_trace_norm(mub, ico):
    rng = np.random.default_rng(1)
    for _ in range(100):
        d = sm.random_state_difference(2, 1, rng)
        for m in (mub, ico, computational_basis()):
            assert db.measurement_bias(m, d) <= db.trace_norm(d) + 1e-9
    for _ in range(20):
        d = sm.random_state_difference(2, 2, rng)
        assert db.measurement_bias(db.product_power(ico, 2), d) <= db.trace_norm(d) + 1e-9


def test_product_bias_matches_naive(ico, mub):
    rng = np.random.default_rng(2)
    for parties in [(ico, ico), (mub, ico), (mub, computational_basis(), ico)]:
        d = sm.random_state_difference(2, len(parties), rng)
        m = db.ProductPovm(parties)
        assert db.measurement_bias(m, d) == pytest.approx(naive_product_bias(m, d), abs=1e-12)
    qutrit = computational_basis(3)
    d = sm.random_state_difference(0, 0, rng, dims=(2, 3))
    m = db.ProductPovm((mub, qutrit))
    assert db.measurement_bias(m, d) == pytest.approx(naive_product_bias(m, d), abs=1e-12)


def test_design_moments_equal_haar(ico):
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = sm.random_state_difference(2, 1, rng)
        for t in (2, 4):
            assert db.design_moment(ico, d, t) == pytest.approx(sm.haar_moment(d, t), abs=1e-9)


def test_mub_matches_haar_up_to_three(mub):
    rng = np.random.default_rng(4)
    d = sm.random_state_difference(2, 1, rng)
    assert db.design_moment(mub, d, 2) == pytest.approx(sm.haar_moment(d, 2), abs=1e-12)
    # fourth moments differ for a generic Delta
    assert abs(db.design_moment(mub, d, 4) - sm.haar_moment(d, 4)) > 1e-6


def test_fourth_moment_chain_examples(ico, mub):
    zero = sm.StateDifference.from_raw(2, 1, np.zeros((2, 2)))
    c = db.fourth_moment_chain(ico, zero)
    assert c.holds and c.bias == 0 and c.design_ratio == 0 and c.hyper_bound == 0
    c = db.fourth_moment_chain(ico, db.z_half_power(1))
    assert c.holds
    assert c.design_moments == pytest.approx((1 / 12, 1 / 80), abs=1e-9)
    rng = np.random.default_rng(5)
    for _ in range(50):
        assert db.fourth_moment_chain(ico, sm.random_state_difference(2, 1, rng)).holds
    with pytest.raises(db.DesignError):
        db.fourth_moment_chain(mub, db.z_half_power(1))


def test_unipartite_bound_examples(ico, mub):
    zero = sm.StateDifference.from_raw(2, 1, np.zeros((2, 2)))
    r = db.check_unipartite_bound(ico, zero)
    assert r.holds and r.lhs == 0
    r = db.check_unipartite_bound(ico, db.z_half_power(1))
    assert r.lhs == pytest.approx(math.sqrt(0.5) / (9 * math.sqrt(1.5)))
    assert r.lhs == pytest.approx(0.0642, abs=5e-5)
    assert r.holds
    rng = np.random.default_rng(6)
    for _ in range(200):
        assert db.check_unipartite_bound(ico, sm.random_state_difference(2, 1, rng)).holds
    with pytest.raises(db.DesignError):
        db.check_unipartite_bound(mub, db.z_half_power(1))


def test_unipartite_bound_uses_one_minus_2p():
    rng = np.random.default_rng(7)
    d = sm.random_state_difference(3, 1, rng)
    expected = math.sqrt((1 - 2 * d.p) ** 2 + np.trace(d.delta @ d.delta).real) / (9 * math.sqrt(4 / 3))
    assert db.unipartite_bound(d) == pytest.approx(expected)


def test_multipartite_bound_examples(ico, mub):
    rng = np.random.default_rng(8)
    d1, d2 = (sm.random_state_difference(2, 1, rng) for _ in range(2))
    prod = sm.StateDifference.from_raw(2, 2, np.kron(d1.delta, d2.delta))
    pm = db.product_power(ico, 2)
    r = db.check_multipartite_bound(pm, prod)
    assert r.holds and r.extra["intermediate_holds"]
    # bias and two_k_norm both factor over a product Delta
    assert r.rhs == pytest.approx(db.measurement_bias(ico, d1) * db.measurement_bias(ico, d2))
    uni = [db.check_unipartite_bound(ico, d) for d in (d1, d2)]
    assert r.lhs == pytest.approx(uni[0].lhs * uni[1].lhs)
    r = db.check_multipartite_bound(pm, db.z_half_power(2))
    assert r.holds
    for _ in range(100):
        assert db.check_multipartite_bound(pm, sm.random_state_difference(2, 2, rng)).holds
    with pytest.raises(db.DesignError):
        db.check_multipartite_bound(db.ProductPovm((ico, mub)), db.z_half_power(2))
    with pytest.raises(ValueError):
        db.check_multipartite_bound(db.product_power(ico, 5), db.z_half_power(5))


def test_exponential_decay_witness(ico):
    biases = [db.measurement_bias(db.product_power(ico, k), db.z_half_power(k)) for k in (1, 2, 3, 4)]
    assert all(a > b for a, b in zip(biases, biases[1:]))
    # product POVM on a product Delta: bias is the k-th power of the single-party bias
    for k, b in enumerate(biases, start=1):
        assert b == pytest.approx(biases[0] ** k)


def test_unequal_dims_flagged(ico):
    qutrit_basis = computational_basis(3)
    d = sm.random_state_difference(0, 0, np.random.default_rng(9), dims=(2, 3))
    with pytest.raises(db.DesignError):
        db.check_multipartite_bound(db.ProductPovm((ico, qutrit_basis)), d)


def test_bloch_state_roundtrip():
    for r in [(0, 0, 1), (0, 0, -1), (1, 0, 0), (0.3, -0.4, 0.5)]:
        v = db.bloch_state(r)
        rho = np.outer(v, v.conj())
        bloch = [np.trace(rho @ s).real for s in (
            np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1]))]
        np.testing.assert_allclose(bloch, np.array(r) / np.linalg.norm(r), atol=1e-12)

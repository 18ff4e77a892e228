"""Acceptance criteria 1-9, each at its stated tolerance and runtime limit."""
import io as stdio
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from hyperlab import boolean_fourier as bf
from hyperlab import cli
from hyperlab import design_bias as db
from hyperlab import oracles
from hyperlab import pauli as pq
from hyperlab import sphere_moments as sm
from hyperlab import xor_games as xg

MARGIN = -1e-10


@pytest.mark.criterion(1, "boolean hypercontractivity on random and low-degree ensembles")
def test_criterion_1_boolean_hypercontractivity():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = math.inf
    for _ in range(1000):
        r = bf.check_noise_hyper(bf.random_function(8, rng), 2, 4, 1 / math.sqrt(3))
        worst = min(worst, r.margin)
    for d in (1, 2, 3):
        for _ in range(1000):
            f = bf.random_low_degree(10, d, rng)
            assert bf.degree(bf.fourier_transform(f)) <= d
            for q in (4, 6):
                worst = min(worst, bf.check_low_degree_hyper(f, q).margin)
    assert worst >= MARGIN
    assert time.perf_counter() - start < 30


@pytest.mark.criterion(2, "Maj3 Fourier anchor and noise on characters")
def test_criterion_2_exact_anchors():
    maj = bf.BooleanFunction.from_callable(3, lambda x: float(np.sign(sum(x))))
    coeffs = bf.fourier_transform(maj).coefficients
    np.testing.assert_allclose(coeffs, [0, .5, .5, 0, .5, 0, 0, -.5], atol=1e-12, rtol=0)
    for n in range(1, 7):
        for subset in range(1 << n):
            chi = oracles.character_values(n, subset)
            for eps in (-0.6, 0.25, 0.9):
                want = oracles.noise_expectation(chi, eps)
                got = bf.noise_operator(bf.character(n, subset), eps).values
                assert np.max(np.abs(got - want)) <= 1e-12
                assert np.max(np.abs(want - eps ** bin(subset).count("1") * chi)) <= 1e-12


def _random_hermitian(n, rng):
    a = rng.standard_normal((1 << n, 1 << n)) + 1j * rng.standard_normal((1 << n, 1 << n))
    return pq.HermitianOperator(n, (a + a.conj().T) / 2)


@pytest.mark.criterion(3, "Pauli roundtrip, Parseval and depolarizing channel")
def test_criterion_3_pauli_layer():
    rng = np.random.default_rng(303)
    for i in range(100):
        m = _random_hermitian(1 + i % 6, rng)
        e = pq.pauli_decompose(m)
        assert np.max(np.abs(pq.pauli_synthesize(e).entries - m.entries)) <= 1e-9
        parseval = sum(abs(c) ** 2 for c in e.coefficients.values())
        assert abs(parseval - pq.schatten_norm(m, 2) ** 2) <= 1e-9 * max(1.0, parseval)
    for i in range(40):
        n = 1 + i % 4
        m = _random_hermitian(n, rng)
        eps = float(rng.uniform(-1, 1))
        want = oracles.explicit_depolarize(np.array(m.entries), n, eps)
        assert np.max(np.abs(pq.depolarize(m, eps).entries - want)) <= 1e-9


@pytest.mark.criterion(4, "spectral tail on the binomial spectrum and on random 3-local operators")
def test_criterion_4_spectral_tail():
    start = time.perf_counter()
    n = 20
    levels, mult = oracles.sum_z_squared_levels(n)
    scale = math.sqrt(1160)
    assert scale == math.sqrt(3 * n * n - 2 * n)
    sp = pq.Spectrum(np.repeat(levels / scale, mult))
    assert math.sqrt(np.mean(sp.eigenvalues**2)) == pytest.approx(1, abs=1e-12)
    max_lam = float(sp.eigenvalues.max())
    for t in (2 * math.e, 6.0, 8.0, 10.0, max_lam):
        assert pq.check_tail_bound_spectrum(sp, 2, t).holds
        exact = oracles.binomial_tail_fraction(n, scale, t)
        assert Fraction(pq.tail_fraction(sp, t)) == exact
    # independent closed form at t = 6: weights w <= 2 or w >= 18
    assert pq.tail_fraction(sp, 6.0) == 2 * (1 + 20 + 190) / 2**20
    rng = np.random.default_rng(404)
    t3 = (2 * math.e) ** 1.5
    for _ in range(1000):
        m = pq.random_local_hamiltonian(8, 3, 40, rng)
        s = pq.spectrum(m)
        assert pq.check_q_hyper(m, 4, sp=s).holds
        assert pq.check_tail_bound(m, t3, s).holds
    assert time.perf_counter() - start < 300


def _bloch_moment(t):
    # Delta = Z/2 on a Haar qubit: tr(Delta psi psi^dag) = cos(theta)/2, theta with density sin(theta)/2
    val, _ = integrate.quad(lambda th: (math.cos(th) / 2) ** t * math.sin(th) / 2, 0, math.pi,
                            epsabs=1e-15, epsrel=1e-13)
    return val


@pytest.mark.criterion(5, "Haar moments: anchors, closed form, Monte Carlo")
def test_criterion_5_haar_moments():
    d = sm.StateDifference.from_raw(2, 1, np.diag([0.5, -0.5]))
    assert abs(sm.haar_moment(d, 2) - _bloch_moment(2)) <= 1e-12
    assert abs(sm.haar_moment(d, 4) - _bloch_moment(4)) <= 1e-12
    assert abs(sm.haar_moment(d, 2) - 1 / 12) <= 1e-12
    assert abs(sm.haar_moment(d, 4) - 1 / 80) <= 1e-12
    rng = np.random.default_rng(505)
    for i in range(500):
        r = sm.random_state_difference(1 + i % 8, 1, rng)
        assert abs(sm.second_moment_closed_form(r) - sm.haar_moment(r, 2)) <= 1e-12
    for dims, t in [((2,), 2), ((2,), 4), ((3,), 4), ((4,), 2), ((4,), 4), ((2, 2), 2), ((2, 2), 4)]:
        r = sm.random_state_difference(0, 0, rng, dims=dims)
        exact = sm.haar_moment(r, t) if len(dims) == 1 else sm.product_haar_moment(r, t)
        mean, se = sm.monte_carlo_moment(r, t, 100_000, rng)
        assert abs(mean - exact) <= 5 * se


@pytest.mark.criterion(6, "design pipeline: MUB, icosahedron, unipartite and multipartite bounds, decay")
def test_criterion_6_design_pipeline():
    mub = db.mub_qubit_povm()
    assert db.check_design(mub, 2).holds
    assert not db.check_design(mub, 4).holds
    ico = db.icosahedron_povm()
    if not db.check_design(ico, 4).holds:
        pytest.skip("no verified 4-design")
    rng = np.random.default_rng(606)
    for _ in range(200):
        d = sm.random_state_difference(2, 1, rng)
        c = db.fourth_moment_chain(ico, d)
        assert c.holds
        assert abs(c.design_moments[0] - sm.haar_moment(d, 2)) <= 1e-9
        assert abs(c.design_moments[1] - sm.haar_moment(d, 4)) <= 1e-9
        assert db.check_unipartite_bound(ico, d).holds
    pm = db.product_power(ico, 2)
    for _ in range(100):
        assert db.check_multipartite_bound(pm, sm.random_state_difference(2, 2, rng)).holds
    b = [db.measurement_bias(db.product_power(ico, k), db.z_half_power(k)) for k in (1, 2, 3)]
    assert b[0] > b[1] > b[2]


@pytest.mark.criterion(7, "XOR games: CHSH anchors, exact bias, bias bounds, Blei-type inequality, constants")
def test_criterion_7_xor_games():
    start = time.perf_counter()
    g = xg.chsh()
    beta, w = xg.bias_exact(g)
    assert beta == 0.5 and xg.evaluate(g, w) == 0.5
    assert abs(xg.bh_norm(g, 4 / 3) - 1 / math.sqrt(2)) <= 1e-12
    r = xg.check_bh(g)
    assert r.holds and abs(r.margin) <= 1e-10
    rng = np.random.default_rng(707)
    shapes = [(k, n) for k in range(2, 9) for n in range(1, 9) if n * k <= 16]
    for i in range(200):
        k, n = shapes[i % len(shapes)]
        game = xg.random_game(k, n, rng)
        assert abs(xg.bias_exact(game)[0] - xg.full_enumeration_bias(game)) <= 1e-12
    for _ in range(500):
        game = xg.random_game(2, int(rng.integers(1, 9)), rng)
        assert xg.check_bh(game).holds and xg.check_bias_lower(game).holds
    for _ in range(100):
        game = xg.random_game(3, 4, rng)
        assert xg.check_bh(game).holds and xg.check_bias_lower(game).holds
    for i in range(1000):
        r, c = (int(v) for v in rng.integers(1, 17, size=2))
        assert xg.blei_check(rng.standard_normal((r, c)), (1, 2, 4)[i % 3]).holds
    assert xg.bh_constant(1).value == 1
    assert abs(xg.bh_constant(4).value - 3 * math.sqrt(2)) <= 1e-12
    assert time.perf_counter() - start < 600


@pytest.mark.criterion(8, "influence cross-check against the boolean module; AA special case")
def test_criterion_8_cross_module():
    rng = np.random.default_rng(808)
    for k, n in [(2, 2), (2, 5), (2, 7), (3, 3), (3, 4), (4, 2), (4, 3), (7, 2), (5, 2), (6, 2)]:
        assert n * k <= 14
        f = xg.random_game(k, n, rng).form
        e = bf.fourier_transform(xg.induced_function(f))
        for j in range(1, k + 1):
            for ell in range(1, n + 1):
                assert abs(xg.influence_form(f, j, ell) - bf.influence(e, xg.variable_index(f, j, ell))) <= 1e-10
    for k, n in [(2, 2), (2, 3), (2, 5), (3, 2), (3, 3), (4, 2)]:
        for _ in range(10):
            alpha = float(rng.uniform(0, 1)) / n**k
            assert xg.check_aa_special(xg.random_constant_magnitude(k, n, alpha, rng)).holds
    assert xg.check_aa_special(xg.chsh()).holds


@pytest.mark.criterion(9, "suite all: byte-identical CSV at worker counts 1 and 8")
def test_criterion_9_determinism(tmp_path):
    runs = {}
    for jobs in (1, 8):
        out = tmp_path / f"jobs{jobs}"
        code = cli.main(["suite", "all", "--seed", "2024", "--jobs", str(jobs), "--out", str(out)],
                        out=stdio.StringIO())
        assert code == 0
        runs[jobs] = ((out / "all.csv").read_bytes(), (out / "all.json").read_bytes())
    assert runs[1][0] == runs[8][0]
    assert runs[1][1] == runs[8][1]

import json

import numpy as np
import pytest

from hyperlab import design_bias as db
from hyperlab import io
from hyperlab import pauli as pq
from hyperlab import xor_games as xg


def write(tmp_path, obj, name="in.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_bundled_files():
    kind, ico = io.load(io.data_path("icosahedron_povm.json"))
    assert kind == "povm" and len(ico.operators) == 12
    assert db.design_order(ico) == 4
    _, mub = io.load(io.data_path("mub_qubit_povm.json"), "povm")
    assert db.design_order(mub) == 3
    _, g = io.load(io.data_path("chsh_game.json"), "game")
    np.testing.assert_allclose(g.form.coeffs, xg.chsh().form.coeffs)


def test_function_format(tmp_path):
    kind, f = io.load(write(tmp_path, {"n": 2, "values": [1, -1, 0.5, 2]}))
    assert kind == "function" and f.arity == 2
    with pytest.raises(io.InputError) as e:
        io.load(write(tmp_path, {"n": 2, "values": [1, 2, 3]}))
    assert e.value.position == "$.values"


def test_syntax_error_position(tmp_path):
    with pytest.raises(io.InputError) as e:
        io.load(write(tmp_path, '{"n": 2,\n "values": [1, 2,, 3]}'))
    assert e.value.position.startswith("line 2")
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, "[1, 2]"))
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, {"mystery": 1}))


def test_operator_formats(tmp_path):
    _, m = io.load(write(tmp_path, {"n_qubits": 2, "terms": [{"s": "ZZ", "c": 0.5}, {"s": "XI", "c": -1}]}))
    np.testing.assert_allclose(m.entries, 0.5 * pq.pauli_matrix("ZZ") - pq.pauli_matrix("XI"))
    y = pq.pauli_matrix("Y")
    _, m = io.load(write(tmp_path, {"n_qubits": 1, "re": y.real.tolist(), "im": y.imag.tolist()}))
    np.testing.assert_allclose(m.entries, y)
    with pytest.raises(io.InputError) as e:
        io.load(write(tmp_path, {"n_qubits": 2, "terms": [{"s": "ZZ", "c": 1}, {"s": "ZQ", "c": 1}]}))
    assert e.value.position == "$.terms[1].s"
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, {"n_qubits": 1, "re": [[0, 1], [0, 0]]}))  # not Hermitian


def test_state_and_delta_formats(tmp_path):
    kind, v = io.load(write(tmp_path, {"re": [0.6, 0], "im": [0, 0.8]}))
    assert kind == "state" and v[1] == 0.8j
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, {"re": [1, 1]}))
    kind, d = io.load(write(tmp_path, {"n": 2, "k": 1, "p": 0.25, "rho": [[1, 0], [0, 0]],
                                       "sigma": {"re": [[0.5, 0], [0, 0.5]], "im": [[0, 0], [0, 0]]}}))
    assert kind == "delta" and not d.raw
    np.testing.assert_allclose(d.delta, np.diag([0.25 - 0.375, -0.375]))
    _, d = io.load(write(tmp_path, {"raw": [[0.5, 0], [0, -0.5]]}))
    assert d.raw and d.dims == (2,)
    _, d = io.load(write(tmp_path, {"dims": [2, 3], "raw": np.eye(6).tolist()}))
    assert d.dims == (2, 3)
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, {"n": 2, "k": 1, "p": 0.5, "rho": [[2, 0], [0, 0]], "sigma": [[1, 0], [0, 0]]}))


def test_povm_formats(tmp_path):
    ops = [np.diag([1.0, 0]), np.diag([0, 1.0])]
    kind, m = io.load(write(tmp_path, io.povm_to_json(db.Povm(2, tuple(ops)))))
    assert kind == "povm" and m.rank_one
    _, m = io.load(write(tmp_path, {"dim": 2, "vectors": [[1, 0], [0, 1]], "weights": [1, 1]}))
    assert db.design_order(m) == 1
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, {"dim": 2, "vectors": [[1, 0], [0, 1]], "weights": [0.5, 0.5]}))
    with pytest.raises(io.InputError) as e:
        io.load(write(tmp_path, {"dim": 2, "vectors": [[1, 0], [0, 1, 0]], "weights": [1, 1]}))
    assert e.value.position == "$.vectors[1]"


def test_game_and_form_formats(tmp_path):
    g = xg.random_game(3, 2, np.random.default_rng(0))
    _, g2 = io.load(write(tmp_path, io.game_to_json(g)))
    np.testing.assert_array_equal(g2.A, g.A)
    np.testing.assert_allclose(g2.pi, g.pi)
    bad = io.game_to_json(g)
    bad["A"][3] = 0
    with pytest.raises(io.InputError) as e:
        io.load(write(tmp_path, bad))
    assert e.value.position == "$.A[3]"
    kind, f = io.load(write(tmp_path, {"k": 2, "n": 2, "coeffs": [0.25, 0.25, 0.25, -0.25]}))
    assert kind == "form" and xg.bias_exact(f)[0] == pytest.approx(0.5)
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, {"k": 2, "n": 2, "coeffs": [1, 2, 3]}))
    with pytest.raises(io.InputError):
        io.load(write(tmp_path, {"k": 2, "n": 2, "coeffs": [1, 2, 3, 4]}), "game")

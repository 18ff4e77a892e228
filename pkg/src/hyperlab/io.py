"""JSON input formats.

Every loader raises :class:`InputError` carrying a position: ``line:col`` for
syntax errors, a JSON path such as ``$.values[3]`` for schema errors.
Complex matrices are ``{"re": [[...]], "im": [[...]]}`` or a plain real
nested list.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import boolean_fourier as bf
from . import design_bias as db
from . import pauli
from . import sphere_moments as sm
from . import xor_games as xg


class InputError(ValueError):
    def __init__(self, message: str, position: str = "$"):
        super().__init__(f"{position}: {message}")
        self.position = position


KINDS = ("function", "operator", "state", "delta", "povm", "game", "form")


def read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(e.msg, f"line {e.lineno} col {e.colno}") from None
    if not isinstance(obj, dict):
        raise InputError("top level must be an object")
    return obj


def detect_kind(obj: dict) -> str:
    keys = set(obj)
    if "values" in keys:
        return "function"
    if "n_qubits" in keys:
        return "operator"
    if "raw" in keys or "rho" in keys:
        return "delta"
    if "dim" in keys:
        return "povm"
    if "pi" in keys or "A" in keys:
        return "game"
    if "coeffs" in keys:
        return "form"
    if "re" in keys:
        return "state"
    raise InputError(f"cannot tell the format from keys {sorted(keys)}")


def _get(obj: dict, key: str, where: str):
    if key not in obj:
        raise InputError(f"missing key {key!r}", where)
    return obj[key]


def _int(obj: dict, key: str, where: str, lo: int = 0) -> int:
    v = _get(obj, key, where)
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise InputError(f"expected integer >= {lo}", f"{where}.{key}")
    return v


def _reals(value, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise InputError("expected a (nested) list of numbers", where) from None
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise InputError("non-finite number", where + "".join(f"[{i}]" for i in bad))
    return arr


def _complex(value, where: str) -> np.ndarray:
    if isinstance(value, dict):
        re = _reals(_get(value, "re", where), where + ".re")
        im = _reals(value.get("im", np.zeros_like(re)), where + ".im")
        if re.shape != im.shape:
            raise InputError(f"re shape {re.shape} and im shape {im.shape} differ", where)
        return re + 1j * im
    return _reals(value, where).astype(complex)


def _matrix(value, where: str, size: int | None = None) -> np.ndarray:
    m = _complex(value, where)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or (size is not None and m.shape[0] != size):
        want = f"{size}x{size}" if size else "square"
        raise InputError(f"expected a {want} matrix, got shape {m.shape}", where)
    return m


def _wrap(where: str, func, *args):
    try:
        return func(*args)
    except InputError:
        raise
    except (ValueError, IndexError) as e:
        raise InputError(str(e), where) from None


def parse_function(obj: dict) -> bf.BooleanFunction:
    n = _int(obj, "n", "$", 1)
    values = _reals(_get(obj, "values", "$"), "$.values")
    if values.shape != (1 << n,):
        raise InputError(f"expected {1 << n} values, got shape {values.shape}", "$.values")
    return bf.BooleanFunction(n, values)


def parse_operator(obj: dict) -> pauli.HermitianOperator:
    n = _int(obj, "n_qubits", "$", 1)
    if "terms" in obj:
        terms = []
        for i, t in enumerate(_get(obj, "terms", "$")):
            where = f"$.terms[{i}]"
            if not isinstance(t, dict):
                raise InputError("term must be an object", where)
            s = _get(t, "s", where)
            if not isinstance(s, str) or len(s) != n or set(s) - set(pauli.LETTERS):
                raise InputError(f"Pauli string must have {n} letters from IXYZ", where + ".s")
            c = _reals(_get(t, "c", where), where + ".c")
            if c.ndim:
                raise InputError("coefficient must be a number", where + ".c")
            terms.append((s, float(c)))
        return _wrap("$.terms", pauli.from_terms, n, terms)
    _get(obj, "re", "$")
    m = _matrix({key: obj[key] for key in ("re", "im") if key in obj}, "$", 1 << n)
    return _wrap("$", pauli.HermitianOperator, n, m)


def parse_state(obj: dict) -> np.ndarray:
    v = _complex(obj, "$")
    if v.ndim != 1:
        raise InputError("state must be a vector", "$.re")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1) > 1e-9:
        raise InputError(f"state must have unit norm, got {norm:.6g}", "$")
    return v


def parse_delta(obj: dict) -> sm.StateDifference:
    dims = obj.get("dims")
    if dims is not None:
        dims = tuple(int(x) for x in dims)
    n = obj.get("n")
    k = obj.get("k", 1)
    if "raw" in obj:
        m = _matrix(obj["raw"], "$.raw")
        if dims is None:
            if n is None:
                n = m.shape[0]
            if n ** k != m.shape[0]:
                raise InputError(f"matrix size {m.shape[0]} is not n^k = {n}^{k}", "$.raw")
        return _wrap("$.raw", sm.StateDifference.from_raw, n or 0, k, m, dims)
    n = _int(obj, "n", "$", 1) if dims is None else 0
    k = _int(obj, "k", "$", 1) if dims is None else len(dims)
    size = math.prod(dims) if dims else n**k
    p = _reals(_get(obj, "p", "$"), "$.p")
    rho = _matrix(_get(obj, "rho", "$"), "$.rho", size)
    sigma = _matrix(_get(obj, "sigma", "$"), "$.sigma", size)
    return _wrap("$", sm.StateDifference.from_states, n, k, float(p), rho, sigma, dims)


def parse_povm(obj: dict) -> db.Povm:
    dim = _int(obj, "dim", "$", 1)
    if "vectors" in obj:
        vecs = [_complex(v, f"$.vectors[{i}]") for i, v in enumerate(obj["vectors"])]
        for i, v in enumerate(vecs):
            if v.shape != (dim,):
                raise InputError(f"vector must have length {dim}", f"$.vectors[{i}]")
        w = _reals(_get(obj, "weights", "$"), "$.weights")
        if w.shape != (len(vecs),):
            raise InputError(f"need {len(vecs)} weights", "$.weights")
        return _wrap("$", db.Povm.from_vectors, vecs, w)
    elements = tuple(_matrix(e, f"$.elements[{i}]", dim) for i, e in enumerate(_get(obj, "elements", "$")))
    return _wrap("$.elements", db.Povm, dim, elements)


def parse_game(obj: dict) -> xg.XorGame:
    k = _int(obj, "k", "$", 2)
    n = _int(obj, "n", "$", 1)
    pi = _reals(_get(obj, "pi", "$"), "$.pi").ravel()
    a = _reals(_get(obj, "A", "$"), "$.A").ravel()
    for key, arr in (("pi", pi), ("A", a)):
        if arr.size != n**k:
            raise InputError(f"expected {n**k} entries, got {arr.size}", f"$.{key}")
    bad = np.flatnonzero(np.abs(a) != 1)
    if bad.size:
        raise InputError("entry must be +1 or -1", f"$.A[{bad[0]}]")
    return _wrap("$.pi", xg.XorGame, k, n, pi, a)


def parse_form(obj: dict) -> xg.MultilinearForm:
    k = _int(obj, "k", "$", 1)
    n = _int(obj, "n", "$", 1)
    c = _reals(_get(obj, "coeffs", "$"), "$.coeffs").ravel()
    if c.size != n**k:
        raise InputError(f"expected {n**k} entries, got {c.size}", "$.coeffs")
    return xg.MultilinearForm(k, n, c)


PARSERS = {
    "function": parse_function,
    "operator": parse_operator,
    "state": parse_state,
    "delta": parse_delta,
    "povm": parse_povm,
    "game": parse_game,
    "form": parse_form,
}


def load(path, kind: str | None = None):
    """Parse ``path``; returns ``(kind, object)``."""
    obj = read_json(path)
    found = detect_kind(obj)
    if kind is not None and found != kind:
        raise InputError(f"expected a {kind} file, found {found}")
    try:
        return found, PARSERS[found](obj)
    except InputError:
        raise
    except (ValueError, TypeError, IndexError) as e:
        raise InputError(str(e)) from None


def data_path(name: str) -> Path:
    """Path of a bundled input file, e.g. ``icosahedron_povm.json``."""
    return Path(__file__).with_name("data") / name


def complex_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def povm_to_json(m: db.Povm) -> dict:
    return {"dim": m.dim, "elements": [complex_to_json(e) for e in m.operators]}


def game_to_json(g: xg.XorGame) -> dict:
    return {"k": g.k, "n": g.n, "pi": g.pi.ravel().tolist(), "A": g.A.ravel().astype(int).tolist()}

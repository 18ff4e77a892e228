"""Multiplayer XOR games and k-linear forms on sign vectors.

A game with distribution ``pi`` and sign tensor ``A`` is identified with the
form ``f(x^1..x^k) = sum f_hat[i_1..i_k] x^1_{i_1} ... x^k_{i_k}`` where
``f_hat = pi * A``; its bias is the sup-norm of ``f`` over sign vectors.
Players and inputs are 1-based in the public API, 0-based in tensors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import boolean_fourier as bf
from .checks import CheckReport, leq

DEFAULT_BUDGET = 2**32
BH_TOL = 1e-10
LOWER_TOL = 1e-12
BLEI_TOL = 1e-10
MAX_INDUCED_VARS = 20


class BudgetExceeded(RuntimeError):
    """Exact bias would visit more tensor elements than allowed; use bias_local_search."""

    def __init__(self, visits: int, budget: int):
        super().__init__(f"exact bias needs {visits} tensor-element visits, budget is {budget}; "
                         "use bias_local_search for a lower bound")
        self.visits = visits
        self.budget = budget


@dataclass(frozen=True)
class MultilinearForm:
    k: int
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be >= 1")
        if c.size == self.n**self.k and c.shape != (self.n,) * self.k:
            c = c.reshape((self.n,) * self.k)
        if c.shape != (self.n,) * self.k:
            raise ValueError(f"coefficients must have shape {(self.n,) * self.k}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def scaled(self, c: float) -> "MultilinearForm":
        return MultilinearForm(self.k, self.n, c * self.coeffs)


@dataclass(frozen=True)
class XorGame:
    k: int
    n: int
    pi: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        shape = (self.n,) * self.k
        if self.k < 2 or self.n < 1:
            raise ValueError("an XOR game needs k >= 2 players and n >= 1 inputs")
        pi = np.array(self.pi, dtype=float).reshape(shape)
        a = np.array(self.A, dtype=float).reshape(shape)
        if np.any(pi < 0) or abs(pi.sum() - 1) > 1e-12:
            raise ValueError("pi must be a probability tensor")
        if not np.all(np.abs(a) == 1):
            raise ValueError("A entries must be +1 or -1")
        pi.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "A", a)

    @property
    def form(self) -> MultilinearForm:
        return MultilinearForm(self.k, self.n, self.pi * self.A)

    @classmethod
    def uniform(cls, k: int, n: int, signs) -> "XorGame":
        return cls(k, n, np.full((n,) * k, 1.0 / n**k), signs)


@dataclass(frozen=True)
class Strategy:
    signs: tuple[np.ndarray, ...]

    def __post_init__(self):
        rows = tuple(np.array(s, dtype=float) for s in self.signs)
        for s in rows:
            if s.ndim != 1 or not np.all(np.abs(s) == 1):
                raise ValueError("strategy entries must be +1 or -1")
            s.setflags(write=False)
        object.__setattr__(self, "signs", rows)

    @property
    def k(self) -> int:
        return len(self.signs)

    def flipped(self, player: int, index: int) -> "Strategy":
        rows = [s.copy() for s in self.signs]
        rows[player - 1][index - 1] *= -1
        return Strategy(tuple(rows))


@dataclass(frozen=True)
class BhConstant:
    """``C_k`` with its derivation: ``value`` is the product of the step factors."""

    k: int
    value: float
    padded_k: int
    trace: tuple[tuple[int, float, str], ...] = field(default=())

    def replay(self) -> float:
        return math.prod(f for _, f, _ in self.trace)


def _form(g) -> MultilinearForm:
    return g.form if isinstance(g, XorGame) else g


def evaluate(f, s: Strategy) -> float:
    f = _form(f)
    if s.k != f.k or any(len(x) != f.n for x in s.signs):
        raise ValueError(f"strategy shape does not match form with k={f.k}, n={f.n}")
    t = f.coeffs
    for x in s.signs:
        t = np.tensordot(x, t, axes=(0, 0))
    return float(t)


def sign_vectors(n: int) -> np.ndarray:
    """All ``2**n`` sign vectors, row ``m`` has ``-1`` where bit ``b`` of ``m`` is set."""
    m = np.arange(1 << n)[:, None]
    return 1.0 - 2.0 * ((m >> np.arange(n)) & 1)


def exact_visits(k: int, n: int) -> int:
    return 2 ** (n * (k - 1)) * n**k


def bias_exact(g, budget: int = DEFAULT_BUDGET) -> tuple[float, Strategy]:
    """Exact bias by enumerating players 1..k-1; the last player answers with marginal signs.

    Ties go to the first assignment in enumeration order, so the witness is
    the lexicographically smallest optimal one.
    """
    f = _form(g)
    k, n = f.k, f.n
    visits = exact_visits(k, n)
    if visits > budget:
        raise BudgetExceeded(visits, budget)
    if k == 1:
        x = np.where(f.coeffs < 0, -1.0, 1.0)
        return float(np.abs(f.coeffs).sum()), Strategy((x,))
    signs = sign_vectors(n)
    # contract players 1..k-1 in order; row index enumerates their joint assignment
    t = f.coeffs.reshape(1, -1)
    for _ in range(k - 1):
        t = t.reshape(t.shape[0], n, -1)
        t = np.einsum("sa,mar->msr", signs, t).reshape(-1, t.shape[2])
    marg = t
    values = np.abs(marg).sum(axis=1)
    best = float(values.max())
    idx = int(np.flatnonzero(values >= best - 1e-15 * max(best, 1.0))[0])
    choice = np.unravel_index(idx, (1 << n,) * (k - 1))
    rows = [signs[c] for c in choice]
    rows.append(np.where(marg[idx] < 0, -1.0, 1.0))
    return best, Strategy(tuple(rows))


def full_enumeration_bias(g) -> float:
    """Brute force over all ``2**(nk)`` strategies; reference for small games."""
    f = _form(g)
    signs = sign_vectors(f.n)
    t = f.coeffs
    for _ in range(f.k):
        t = np.tensordot(t, signs, axes=(0, 1))
    return float(np.abs(t).max())


def _marginal(coeffs: np.ndarray, rows: list[np.ndarray], player: int) -> np.ndarray:
    t = coeffs
    for j in reversed(range(len(rows))):
        if j != player:
            t = np.tensordot(t, rows[j], axes=(j, 0))
    return t


def best_response_ascent(f: MultilinearForm, rows: list[np.ndarray]) -> list[np.ndarray]:
    """Cycle through players setting each to the signs of its marginal; a zero marginal keeps the sign."""
    rows = [r.copy() for r in rows]
    changed = True
    while changed:
        changed = False
        for j in range(f.k):
            m = _marginal(f.coeffs, rows, j)
            new = np.where(m > 0, 1.0, np.where(m < 0, -1.0, rows[j]))
            if np.any(new != rows[j]):
                rows[j] = new
                changed = True
    return rows


def bias_local_search(g, restarts: int = 10, seed: int = 0,
                      return_runs: bool = False):
    """Lower bound on the bias from seeded best-response ascent."""
    f = _form(g)
    rng = np.random.default_rng(seed)
    best, best_rows, runs = -math.inf, None, []
    for _ in range(max(restarts, 1)):
        start = [rng.choice([-1.0, 1.0], size=f.n) for _ in range(f.k)]
        rows = best_response_ascent(f, start)
        v = evaluate(f, Strategy(tuple(rows)))
        runs.append(v)
        if v > best:
            best, best_rows = v, rows
    result = (best, Strategy(tuple(best_rows)))
    return result + (runs,) if return_runs else result


def is_fixed_point(f, s: Strategy) -> bool:
    f = _form(f)
    rows = list(s.signs)
    for j in range(f.k):
        m = _marginal(f.coeffs, rows, j)
        if np.any(m * rows[j] < 0):
            return False
    return True


def bh_norm(f, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(_form(f).coeffs).ravel()
    if math.isinf(p):
        return float(a.max())
    return float(np.sum(a**p) ** (1 / p))


def bh_exponent(k: int) -> float:
    return 2 * k / (k + 1)


def bh_constant(k: int) -> BhConstant:
    if k < 1:
        raise ValueError("k must be >= 1")
    size = 1 << (k - 1).bit_length()
    trace = [(1, 1.0, "C_1 = 1")]
    if size >= 2:
        trace.append((2, math.sqrt(2), "C_2 = sqrt(2), Littlewood 4/3 inequality"))
    m = 4
    while m <= size:
        factor = (1 + 4 / (m - 2)) ** (m / 4)
        trace.append((m, factor, f"C_{m} = (1 + 4/{m - 2})^({m}/4) * C_{m // 2}"))
        m *= 2
    if size != k:
        trace.append((k, 1.0, f"k={k} padded to {size}"))
    trace = tuple(trace)
    return BhConstant(k, math.prod(f for _, f, _ in trace), size, trace)


def check_bh(g, budget: int = DEFAULT_BUDGET) -> CheckReport:
    f = _form(g)
    beta, _ = bias_exact(f, budget)
    c = bh_constant(f.k).value
    return leq(bh_norm(f, bh_exponent(f.k)), c * beta, BH_TOL, beta=beta, C_k=c)


def check_bias_lower(g, budget: int = DEFAULT_BUDGET, restarts: int = 10, seed: int = 0) -> CheckReport:
    """``n^{-(k-1)/2} / C_k <= beta``; falls back to local search beyond the budget."""
    f = _form(g)
    if abs(np.abs(f.coeffs).sum() - 1) > 1e-12:
        raise ValueError("coefficients must have l1 norm 1")
    try:
        beta, _ = bias_exact(f, budget)
        method = "exact"
    except BudgetExceeded:
        beta, _ = bias_local_search(f, restarts, seed)
        method = "search"
    c = bh_constant(f.k).value
    return leq(f.n ** (-(f.k - 1) / 2) / c, beta, LOWER_TOL, beta=beta, C_k=c, method=method)


def blei_check(a, m: float) -> CheckReport:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    a = np.atleast_2d(np.asarray(a, dtype=float))
    p = 2 * m / (m + 1)
    r = 2 * m / (m + 2)
    lhs = np.sum(np.abs(a) ** p) ** (1 / p)
    cols = np.linalg.norm(a, axis=0)
    rows = np.linalg.norm(a, axis=1)
    e = (m + 2) / (4 * m)
    rhs = np.sum(cols**r) ** e * np.sum(rows**r) ** e
    return leq(float(lhs), float(rhs), BLEI_TOL, m=m)


def influence_form(f, j: int, ell: int) -> float:
    f = _form(f)
    if not 1 <= j <= f.k or not 1 <= ell <= f.n:
        raise IndexError(f"(j, l) = ({j}, {ell}) outside 1..{f.k} x 1..{f.n}")
    sl = np.take(f.coeffs, ell - 1, axis=j - 1)
    return float(np.sum(sl**2))


def variance_form(f) -> float:
    return float(np.sum(_form(f).coeffs ** 2))


def induced_function(f) -> bf.BooleanFunction:
    """Truth table on ``n*k`` variables; variable ``(j, l)`` has index ``(j-1)*n + l``."""
    f = _form(f)
    nv = f.n * f.k
    if nv > MAX_INDUCED_VARS:
        raise ValueError(f"n*k = {nv} exceeds {MAX_INDUCED_VARS} variables")
    coeffs = np.zeros(1 << nv)
    for idx in np.ndindex(*f.coeffs.shape):
        mask = sum(1 << (j * f.n + i) for j, i in enumerate(idx))
        coeffs[mask] = f.coeffs[idx]
    return bf.synthesize(bf.FourierExpansion(nv, coeffs))


def variable_index(f, j: int, ell: int) -> int:
    return (j - 1) * _form(f).n + ell


def check_aa_special(f, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """Constant-magnitude case: ``Var^2 / I = n^{k+1} alpha^2 <= C_k^2 ||f||_inf^2``."""
    f = _form(f)
    mags = np.abs(f.coeffs)
    alpha = float(mags.flat[0])
    if np.max(np.abs(mags - alpha)) > 1e-12:
        raise ValueError("all coefficient magnitudes must be equal")
    c = bh_constant(f.k).value
    try:
        sup, _ = bias_exact(f, budget)
        source = "exact"
    except BudgetExceeded:
        sup = float(mags.sum())
        source = "l1_upper"
    var = f.n**f.k * alpha**2
    infl = f.n ** (f.k - 1) * alpha**2
    ratio = var**2 / infl if infl > 0 else 0.0
    return leq(ratio, c**2 * sup**2, BH_TOL, variance=var, influence=infl, sup_norm=sup,
               sup_source=source, sup_at_most_one=sup <= 1 + 1e-12)


def random_game(k: int, n: int, rng: np.random.Generator) -> XorGame:
    pi = rng.random((n,) * k)
    pi /= pi.sum()
    # keep exact normalization after division
    pi.flat[0] += 1.0 - pi.sum()
    return XorGame(k, n, np.clip(pi, 0, None), rng.choice([-1.0, 1.0], size=(n,) * k))


def random_constant_magnitude(k: int, n: int, alpha: float, rng: np.random.Generator) -> MultilinearForm:
    return MultilinearForm(k, n, alpha * rng.choice([-1.0, 1.0], size=(n,) * k))


def chsh() -> XorGame:
    return XorGame.uniform(2, 2, [[1, 1], [1, -1]])

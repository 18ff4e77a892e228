"""Fourier analysis of real functions on the boolean cube.

Points are bitmasks ``x`` in ``range(2**n)``; bit ``b`` set means variable
``x_{b+1} = -1``.  Subsets ``S`` of ``{1..n}`` use the same bitmask
encoding, so ``chi_S(x) = (-1)**popcount(x & S)``.  Variable indices in the
public API are 1-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .checks import CheckReport, leq

ZERO_TOL = 1e-12
CHECK_TOL = 1e-10


def _popcounts(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        counts += (idx >> b) & 1
    return counts


@dataclass(frozen=True)
class BooleanFunction:
    arity: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.arity < 1:
            raise ValueError("arity must be >= 1")
        if values.shape != (1 << self.arity,):
            raise ValueError(f"expected {1 << self.arity} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, n: int, func) -> "BooleanFunction":
        """Tabulate ``func`` on +-1 vectors of length ``n``."""
        pts = points(n)
        return cls(n, np.array([func(row) for row in pts], dtype=float))


@dataclass(frozen=True)
class FourierExpansion:
    arity: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != (1 << self.arity,):
            raise ValueError(f"expected {1 << self.arity} coefficients, got shape {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)


def points(n: int) -> np.ndarray:
    """All points of {+-1}^n as a (2^n, n) array in bitmask order."""
    idx = np.arange(1 << n)[:, None]
    bits = (idx >> np.arange(n)[None, :]) & 1
    return 1 - 2 * bits


def character(n: int, subset: int) -> BooleanFunction:
    par = _popcounts(n)[np.arange(1 << n) & subset] if subset else np.zeros(1 << n, dtype=np.int64)
    return BooleanFunction(n, np.where(par % 2 == 0, 1.0, -1.0))


def subset_mask(variables) -> int:
    """Bitmask of a collection of 1-based variable indices."""
    mask = 0
    for v in variables:
        mask |= 1 << (v - 1)
    return mask


def _walsh_hadamard(vec: np.ndarray) -> np.ndarray:
    """Unnormalized in-place butterfly; returns ``sum_x v[x] (-1)^{popcount(x&S)}``."""
    a = np.array(vec, dtype=float, copy=True)
    size = a.shape[0]
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        lo = a[:, 0, :].copy()
        a[:, 0, :] += a[:, 1, :]
        a[:, 1, :] = lo - a[:, 1, :]
        a = a.reshape(size)
        h *= 2
    return a


def fourier_transform(f: BooleanFunction) -> FourierExpansion:
    return FourierExpansion(f.arity, _walsh_hadamard(f.values) / (1 << f.arity))


def synthesize(e: FourierExpansion) -> BooleanFunction:
    return BooleanFunction(e.arity, _walsh_hadamard(e.coefficients))


def noise_operator(f: BooleanFunction, eps: float) -> BooleanFunction:
    if abs(eps) > 1:
        raise ValueError(f"noise rate must satisfy |eps| <= 1, got {eps}")
    e = fourier_transform(f)
    weights = float(eps) ** _popcounts(f.arity)
    return synthesize(FourierExpansion(f.arity, e.coefficients * weights))


def lp_norm(f: BooleanFunction, p: float) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    return float(np.mean(a**p) ** (1.0 / p))


def degree(e: FourierExpansion) -> int:
    nz = np.abs(e.coefficients) > ZERO_TOL
    if not nz.any():
        return 0
    return int(_popcounts(e.arity)[nz].max())


def influence(e: FourierExpansion, j: int) -> float:
    if not 1 <= j <= e.arity:
        raise IndexError(f"variable index {j} out of range 1..{e.arity}")
    mask = (np.arange(1 << e.arity) >> (j - 1)) & 1
    return float(np.sum(e.coefficients[mask == 1] ** 2))


def influence_by_flips(f: BooleanFunction, j: int) -> float:
    """Influence from the definition ``2^-(n+2) sum_x (f(x) - f(x^j))^2``."""
    if not 1 <= j <= f.arity:
        raise IndexError(f"variable index {j} out of range 1..{f.arity}")
    flipped = f.values[np.arange(1 << f.arity) ^ (1 << (j - 1))]
    return float(np.sum((f.values - flipped) ** 2) / (1 << (f.arity + 2)))


def variance(e: FourierExpansion) -> float:
    return float(np.sum(e.coefficients[1:] ** 2))


def check_noise_hyper(f: BooleanFunction, p: float, q: float, eps: float) -> CheckReport:
    """Check ``||T_eps f||_q <= ||f||_p`` for admissible ``(p, q, eps)``."""
    if not 1 <= p <= q:
        raise ValueError(f"need 1 <= p <= q, got p={p}, q={q}")
    if p == q:
        limit = 1.0
    elif math.isinf(q):
        limit = 0.0
    else:
        limit = math.sqrt((p - 1) / (q - 1))
    if eps > limit + 1e-15:
        raise ValueError(f"eps={eps} exceeds sqrt((p-1)/(q-1))={limit}")
    return leq(lp_norm(noise_operator(f, eps), q), lp_norm(f, p), CHECK_TOL, p=p, q=q, eps=eps)


def check_low_degree_hyper(f: BooleanFunction, q: float, p: float | None = None) -> CheckReport:
    """Check ``||f||_q <= (q-1)^{d/2} ||f||_2``; optionally also the ``p <= 2`` lower direction.

    With ``p`` given, the returned report is the weaker of the two checks
    (smallest margin); both sides are kept in ``extra``.
    """
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    d = degree(fourier_transform(f))
    two = lp_norm(f, 2)
    upper = leq(lp_norm(f, q), (q - 1) ** (d / 2) * two, CHECK_TOL, q=q, degree=d)
    if p is None:
        return upper
    if not 1 < p <= 2:
        raise ValueError(f"p must lie in (1, 2], got {p}")
    lower = leq((p - 1) ** (d / 2) * two, lp_norm(f, p), CHECK_TOL, p=p, degree=d)
    worst = upper if upper.margin <= lower.margin else lower
    return CheckReport(worst.lhs, worst.rhs, CHECK_TOL, {
        "q": q, "p": p, "degree": d,
        "upper": upper.as_dict(), "lower": lower.as_dict(),
        "both_hold": upper.holds and lower.holds,
    })


def random_function(n: int, rng: np.random.Generator) -> BooleanFunction:
    return BooleanFunction(n, rng.standard_normal(1 << n))


def random_low_degree(n: int, d: int, rng: np.random.Generator) -> BooleanFunction:
    """Normal coefficients on all ``|S| <= d``, zero above, synthesized."""
    coeffs = rng.standard_normal(1 << n)
    coeffs[_popcounts(n) > d] = 0.0
    return synthesize(FourierExpansion(n, coeffs))

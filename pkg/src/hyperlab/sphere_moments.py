"""Exact Haar moments of ``psi -> tr(Delta |psi><psi|)``.

Single-party moments are permutation sums over the symmetric group grouped
by cycle type:

    E_psi (tr Delta psi psi^dag)^t
        = sum_{pi in S_t} prod_{cycles c of pi} tr(Delta^{|c|}) / (n (n+1) ... (n+t-1))

Product moments over ``k`` independent Haar states use one normalized
symmetric projector per party.  Schatten 2-norms here are *unnormalized*
(``sqrt(tr Delta^2)``), unlike the normalized norms in :mod:`hyperlab.pauli`.
Party indices are 1-based.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .checks import CheckReport, leq

MAX_T = 8
DENSE_LIMIT = 65536


class OddMomentWarning(UserWarning):
    pass


@dataclass(frozen=True)
class StateDifference:
    """``Delta = p rho - (1-p) sigma`` on parties with local dimensions ``dims``.

    Built with :meth:`from_states` (validated) or :meth:`from_raw` for an
    arbitrary Hermitian matrix, in which case ``raw`` is set.
    """

    dims: tuple[int, ...]
    delta: np.ndarray
    p: float | None = None
    rho: np.ndarray | None = None
    sigma: np.ndarray | None = None
    raw: bool = False

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        if len(set(self.dims)) != 1:
            raise ValueError(f"local dimensions differ: {self.dims}")
        return self.dims[0]

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @classmethod
    def from_states(cls, n: int, k: int, p: float, rho, sigma, dims=None) -> "StateDifference":
        dims = tuple(dims) if dims is not None else (n,) * k
        if not 0 <= p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        rho = _density(rho, math.prod(dims), "rho")
        sigma = _density(sigma, math.prod(dims), "sigma")
        delta = p * rho - (1 - p) * sigma
        delta.setflags(write=False)
        return cls(dims, delta, float(p), rho, sigma, raw=False)

    @classmethod
    def from_raw(cls, n: int, k: int, delta, dims=None) -> "StateDifference":
        dims = tuple(dims) if dims is not None else (n,) * k
        size = math.prod(dims)
        d = np.asarray(delta, dtype=complex)
        if d.shape != (size, size):
            raise ValueError(f"expected {size}x{size} matrix, got {d.shape}")
        if np.max(np.abs(d - d.conj().T), initial=0.0) > 1e-10:
            raise ValueError("Delta must be Hermitian")
        d = (d + d.conj().T) / 2
        d.setflags(write=False)
        return cls(dims, d, raw=True)

    def scaled(self, c: float) -> "StateDifference":
        return StateDifference.from_raw(0, 0, c * self.delta, dims=self.dims)


def _density(m, dim: int, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (dim, dim):
        raise ValueError(f"{name} must be {dim}x{dim}, got {m.shape}")
    if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-9:
        raise ValueError(f"{name} is not Hermitian")
    m = (m + m.conj().T) / 2
    if abs(np.trace(m).real - 1) > 1e-9:
        raise ValueError(f"{name} must have unit trace")
    if np.linalg.eigvalsh(m).min() < -1e-9:
        raise ValueError(f"{name} is not positive semidefinite")
    return m


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.standard_normal((dim, rank or dim)) + 1j * rng.standard_normal((dim, rank or dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state_difference(n: int, k: int, rng: np.random.Generator, dims=None) -> StateDifference:
    dims = tuple(dims) if dims is not None else (n,) * k
    size = math.prod(dims)
    p = float(rng.uniform())
    return StateDifference.from_states(0, 0, p, random_density(size, rng), random_density(size, rng), dims=dims)


@lru_cache(maxsize=None)
def cycle_types(t: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Partitions of ``t`` with the number of permutations of that cycle type."""
    if not 0 <= t <= MAX_T:
        raise ValueError(f"t must lie in 0..{MAX_T}")
    out = []
    for part in _partitions(t, t):
        count = math.factorial(t)
        for length in set(part):
            mult = part.count(length)
            count //= length**mult * math.factorial(mult)
        out.append((part, count))
    return tuple(out)


def _partitions(t: int, largest: int):
    if t == 0:
        yield ()
        return
    for first in range(min(t, largest), 0, -1):
        for rest in _partitions(t - first, first):
            yield (first,) + rest


def rising(n: int, t: int) -> int:
    return math.prod(range(n, n + t))


def haar_moment(d: StateDifference, t: int) -> float:
    if d.k != 1:
        raise ValueError("haar_moment is single-party; use product_haar_moment for k > 1")
    if t > MAX_T or t < 0:
        raise ValueError(f"t must lie in 0..{MAX_T}, got {t}")
    if t % 2:
        warnings.warn(f"odd moment t={t}: value is signed and may vanish", OddMomentWarning, stacklevel=2)
    lam = np.linalg.eigvalsh(d.delta)
    power_traces = [float(np.sum(lam**ell)) for ell in range(t + 1)]
    total = sum(count * math.prod(power_traces[ell] for ell in part) for part, count in cycle_types(t))
    return total / rising(d.n, t)


def second_moment_closed_form(d: StateDifference) -> float:
    if d.k != 1:
        raise ValueError("single-party only")
    tr = np.trace(d.delta).real
    tr2 = np.trace(d.delta @ d.delta).real
    return float((tr * tr + tr2) / (d.n * (d.n + 1)))


def moment_ratio_check(d: StateDifference, q: int) -> CheckReport:
    """Degree-2 sphere hypercontractivity: ``E[f^q]^{1/q} <= (q-1) E[f^2]^{1/2}``."""
    if q not in (4, 6, 8):
        raise ValueError(f"q must be one of 4, 6, 8, got {q}")
    mq = max(haar_moment(d, q), 0.0)
    m2 = max(haar_moment(d, 2), 0.0)
    return leq(mq ** (1 / q), (q - 1) * math.sqrt(m2), 1e-10, q=q)


def _normalize_subset(subset, k: int) -> tuple[int, ...]:
    s = tuple(sorted(set(subset)))
    if any(not 1 <= j <= k for j in s):
        raise ValueError(f"subset {subset} not within parties 1..{k}")
    return s


def partial_trace(d: StateDifference, subset) -> np.ndarray:
    """Trace out the parties in ``subset``; tracing everything gives a 1x1 matrix."""
    s = _normalize_subset(subset, d.k)
    k = d.k
    t = np.asarray(d.delta).reshape(d.dims * 2)
    keep = [j for j in range(k) if j + 1 not in s]
    rows = "".join(chr(97 + j) for j in range(k))
    cols = "".join(chr(97 + k + j) if j + 1 not in s else chr(97 + j) for j in range(k))
    out = "".join(rows[j] for j in keep) + "".join(cols[j] for j in keep)
    m = np.einsum(f"{rows}{cols}->{out}", t)
    size = math.prod(d.dims[j] for j in keep)
    return np.asarray(m).reshape(size, size)


def hs_norm_sq(m: np.ndarray) -> float:
    return float(np.sum(np.abs(m) ** 2))


def two_k_norm(d: StateDifference) -> float:
    """``sqrt(sum_{S subset [k]} ||tr_S Delta||_2^2)`` with unnormalized 2-norms."""
    total = 0.0
    for size in range(d.k + 1):
        for s in combinations(range(1, d.k + 1), size):
            total += hs_norm_sq(partial_trace(d, s))
    return math.sqrt(total)


@lru_cache(maxsize=None)
def symmetric_projector(n: int, t: int) -> np.ndarray:
    """``E_psi |psi><psi|^{(x)t}`` = sum of permutation operators / n(n+1)...(n+t-1), shape (n**t, n**t)."""
    dim = n**t
    idx = np.indices((n,) * t).reshape(t, dim)
    strides = n ** np.arange(t - 1, -1, -1)
    out = np.zeros((dim, dim))
    cols = np.arange(dim)
    for perm in permutations(range(t)):
        rows = strides @ idx[list(perm)]
        out[rows, cols] += 1.0
    return out / rising(n, t)


def _dense_product_moment(d: StateDifference, t: int) -> float:
    k = d.k
    if d.dim**t > DENSE_LIMIT:
        raise ValueError(f"dense moment needs n^(tk) <= {DENSE_LIMIT}, got {d.dim**t}")
    syms = [symmetric_projector(n, t).reshape((n,) * (2 * t)) for n in d.dims]
    dt = np.asarray(d.delta).reshape(d.dims * 2)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    a = [[next(letters) for _ in range(k)] for _ in range(t)]
    b = [[next(letters) for _ in range(k)] for _ in range(t)]
    terms = ["".join(a[c]) + "".join(b[c]) for c in range(t)]
    # tr(Delta^{(x)t} Pi) = sum Delta[A, B] Pi[B, A]
    terms += ["".join(b[c][j] for c in range(t)) + "".join(a[c][j] for c in range(t)) for j in range(k)]
    value = np.einsum(",".join(terms) + "->", *([dt] * t + syms), optimize="greedy")
    return float(np.real(value))


def product_haar_moment(d: StateDifference, t: int, method: str = "auto") -> float:
    """``E_{psi_1..psi_k} (tr Delta (psi_1 psi_1^dag (x) ... (x) psi_k psi_k^dag))^t`` for ``t`` in {2, 4}."""
    if t not in (2, 4):
        raise ValueError(f"t must be 2 or 4, got {t}")
    if method not in ("auto", "closed", "dense"):
        raise ValueError(f"unknown method {method!r}")
    if t == 2 and method != "dense":
        return two_k_norm(d) ** 2 / math.prod(n * (n + 1) for n in d.dims)
    if method == "closed":
        raise ValueError("closed form exists only for t = 2")
    return _dense_product_moment(d, t)


def product_moment_ratio_check(d: StateDifference, q: int = 4) -> CheckReport:
    """``E[f^4]^{1/4} <= 9^{k/2} E[f^2]^{1/2}`` for the product-sphere degree-2 function."""
    if q != 4:
        raise ValueError("only q = 4 is supported")
    m4 = max(product_haar_moment(d, 4), 0.0)
    m2 = max(product_haar_moment(d, 2), 0.0)
    return leq(m4**0.25, 9 ** (d.k / 2) * math.sqrt(m2), 1e-9, q=q, k=d.k)


def monte_carlo_moment(d: StateDifference, t: int, samples: int,
                       rng: np.random.Generator, batch: int = 10000) -> tuple[float, float]:
    """Haar-sampled estimate of the product moment and its standard error."""
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        state = None
        for n in d.dims:
            v = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            state = v if state is None else np.einsum("si,sj->sij", state, v).reshape(m, -1)
        vals = np.real(np.einsum("si,ij,sj->s", state.conj(), d.delta, state)) ** t
        total += float(vals.sum())
        total_sq += float((vals**2).sum())
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / (samples - 1)) if samples > 1 else math.inf

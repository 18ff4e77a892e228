"""Pauli-basis analysis of n-qubit Hermitian operators.

Pauli strings are written over ``IXYZ`` with the first character acting on
the first (most significant) tensor factor.  Norms in this module are the
normalized Schatten norms ``(2^-n tr|M|^p)^(1/p)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from .checks import CheckReport, leq

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
LETTERS = "IXYZ"
HERMITIAN_TOL = 1e-10
COEFF_TOL = 1e-12
RESIDUAL_TOL = 1e-8
DENSE_MAX_QUBITS = 7

# T[s, a, b] = sigma_s[b, a] / 2, so sum_ab T[s,a,b] m[a,b] = tr(sigma_s m) / 2
_TO_PAULI = np.stack([PAULI[c].T for c in LETTERS]) / 2
# U[s, a, b] = sigma_s[a, b]
_FROM_PAULI = np.stack([PAULI[c] for c in LETTERS])


class NotHermitianError(ValueError):
    pass


class EigenSolveError(RuntimeError):
    pass


def weight(s: str) -> int:
    return sum(c != "I" for c in s)


def _string_action(s: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``sigma_s |c> = phase_c |c ^ xmask>``: rows, columns and phases of the signed permutation."""
    n = len(s)
    xmask = sum(1 << (n - 1 - q) for q, c in enumerate(s) if c in "XY")
    zmask = sum(1 << (n - 1 - q) for q, c in enumerate(s) if c in "ZY")
    cols = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=np.int64)
    z = cols & zmask
    while np.any(z):
        parity ^= z & 1
        z = z >> 1
    phase = (1j) ** s.count("Y") * (1 - 2 * parity)
    return cols ^ xmask, cols, phase


def pauli_matrix(s: str) -> np.ndarray:
    if len(s) <= 3:
        return reduce(np.kron, (PAULI[c] for c in s))
    rows, cols, phase = _string_action(s)
    out = np.zeros((len(rows), len(rows)), dtype=complex)
    out[rows, cols] = phase
    return out


@dataclass(frozen=True)
class HermitianOperator:
    n_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        dim = 1 << self.n_qubits
        if m.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {m.shape}")
        dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if dev > HERMITIAN_TOL:
            raise NotHermitianError(f"operator is not Hermitian (max |M - M^dag| = {dev:.3g})")
        m = (m + m.conj().T) / 2
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @classmethod
    def identity(cls, n: int) -> "HermitianOperator":
        return cls(n, np.eye(1 << n))


@dataclass(frozen=True)
class PauliExpansion:
    n_qubits: int
    coefficients: dict[str, float]

    def __post_init__(self):
        for s in self.coefficients:
            if len(s) != self.n_qubits or set(s) - set(LETTERS):
                raise ValueError(f"bad Pauli string {s!r} for {self.n_qubits} qubits")

    def __getitem__(self, s: str) -> float:
        return self.coefficients.get(s, 0.0)

    def dense(self) -> np.ndarray:
        """Coefficients as a (4,)*n array indexed by I=0, X=1, Y=2, Z=3."""
        out = np.zeros((4,) * self.n_qubits)
        for s, c in self.coefficients.items():
            out[tuple(LETTERS.index(ch) for ch in s)] = c
        return out


def pauli_decompose(m: HermitianOperator) -> PauliExpansion:
    """Real coefficients ``2^-n tr(sigma_s M)`` via a per-qubit tensor transform."""
    n = m.n_qubits
    t = np.asarray(m.entries).reshape((2,) * (2 * n))
    # bring each qubit's (row, col) pair together: axes (a1,b1,a2,b2,...)
    order = [ax for q in range(n) for ax in (q, n + q)]
    t = t.transpose(order)
    for _ in range(n):
        # contract leading (a, b) pair, append the Pauli index at the end
        t = np.tensordot(t, _TO_PAULI, axes=([0, 1], [1, 2]))
    if np.max(np.abs(t.imag), initial=0.0) > HERMITIAN_TOL:
        raise NotHermitianError("Pauli coefficients have non-negligible imaginary parts")
    real = t.real
    # drop transform roundoff, keep the expansion sparse
    cutoff = 1e-15 * max(float(np.max(np.abs(real), initial=0.0)), 1.0)
    coeffs = {}
    for idx in zip(*np.nonzero(np.abs(real) > cutoff)):
        coeffs["".join(LETTERS[i] for i in idx)] = float(real[idx])
    return PauliExpansion(n, coeffs)


def pauli_synthesize(e: PauliExpansion) -> HermitianOperator:
    n = e.n_qubits
    if n <= DENSE_MAX_QUBITS:
        t = e.dense().astype(complex)
        for _ in range(n):
            # contract leading Pauli index, append (a, b) at the end
            t = np.tensordot(t, _FROM_PAULI, axes=([0], [0]))
        # axes now (a1,b1,a2,b2,...) -> (a1..an, b1..bn)
        order = [2 * q for q in range(n)] + [2 * q + 1 for q in range(n)]
        mat = t.transpose(order).reshape(1 << n, 1 << n)
    else:
        mat = np.zeros((1 << n, 1 << n), dtype=complex)
        for s, c in e.coefficients.items():
            rows, cols, phase = _string_action(s)
            mat[rows, cols] += c * phase
    return HermitianOperator(n, mat)


def from_terms(n: int, terms) -> HermitianOperator:
    """Operator from ``(pauli_string, coefficient)`` pairs; repeats accumulate."""
    coeffs: dict[str, float] = {}
    for s, c in terms:
        coeffs[s] = coeffs.get(s, 0.0) + float(c)
    return pauli_synthesize(PauliExpansion(n, coeffs))


def depolarize(m: HermitianOperator, eps: float) -> HermitianOperator:
    """Tensor power of the qubit depolarizing channel, applied on the Pauli side.

    ``|eps| > 1`` is accepted for Fourier-side experiments but is not a channel.
    """
    e = pauli_decompose(m)
    scaled = {s: c * float(eps) ** weight(s) for s, c in e.coefficients.items()}
    return pauli_synthesize(PauliExpansion(m.n_qubits, scaled))


def is_channel_rate(eps: float) -> bool:
    return abs(eps) <= 1


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None


def spectrum(m: HermitianOperator, with_vectors: bool = False) -> Spectrum:
    """Dense Hermitian eigensolve with a residual check on every eigenpair."""
    a = np.asarray(m.entries)
    # vectors are always computed: the residual check needs them
    vals, vecs = np.linalg.eigh(a)
    scale = max(float(np.max(np.abs(vals), initial=0.0)), 1e-300)
    resid = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
    worst = float(resid.max(initial=0.0))
    if worst > RESIDUAL_TOL * scale:
        raise EigenSolveError(f"eigen residual {worst:.3g} exceeds {RESIDUAL_TOL} * {scale:.3g}")
    return Spectrum(vals, vecs if with_vectors else None)


def schatten_norm(m: HermitianOperator, p: float, sp: Spectrum | None = None) -> float:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    lam = np.abs((sp or spectrum(m)).eigenvalues)
    if math.isinf(p):
        return float(lam.max())
    return float(np.mean(lam**p) ** (1.0 / p))


def locality(e: PauliExpansion) -> int:
    return max((weight(s) for s, c in e.coefficients.items() if abs(c) > COEFF_TOL), default=0)


def _sample_weighted_string(n: int, k: int, rng: np.random.Generator) -> str:
    counts = np.array([math.comb(n, w) * 3**w for w in range(1, k + 1)], dtype=float)
    w = 1 + int(rng.choice(k, p=counts / counts.sum()))
    support = rng.choice(n, size=w, replace=False)
    letters = ["I"] * n
    for q in support:
        letters[q] = "XYZ"[rng.integers(3)]
    return "".join(letters)


def random_local_hamiltonian(n: int, k: int, terms: int, seed) -> HermitianOperator:
    """Sum of uniformly random Pauli strings of weight 1..k with normal weights, scaled to ``||M||_2 = 1``."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    coeffs: dict[str, float] = {}
    for _ in range(terms):
        s = _sample_weighted_string(n, k, rng)
        coeffs[s] = coeffs.get(s, 0.0) + float(rng.standard_normal())
    norm = math.sqrt(sum(c * c for c in coeffs.values()))
    if norm == 0:
        raise ValueError("generated operator is zero")
    return pauli_synthesize(PauliExpansion(n, {s: c / norm for s, c in coeffs.items()}))


def tail_fraction(sp: Spectrum, t: float) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = np.abs(sp.eigenvalues)
    return float(np.count_nonzero(lam >= t)) / lam.size


def tail_bound(k: int, t: float) -> float:
    return math.exp(-k * t ** (2 / k) / (2 * math.e))


def check_tail_bound(m: HermitianOperator, t: float, sp: Spectrum | None = None) -> CheckReport:
    """Fraction of eigenvalues with ``|lambda| >= t`` against ``exp(-k t^(2/k) / 2e)``."""
    sp = sp or spectrum(m)
    return check_tail_bound_spectrum(sp, locality(pauli_decompose(m)), t)


def check_tail_bound_spectrum(sp: Spectrum, k: int, t: float) -> CheckReport:
    """Same check from a known spectrum and locality, for operators too large to store densely."""
    two = float(np.sqrt(np.mean(np.asarray(sp.eigenvalues) ** 2)))
    if abs(two - 1) > 1e-8:
        raise ValueError(f"operator must have ||M||_2 = 1, got {two}")
    if k == 0:
        raise ValueError("tail bound needs a non-trivial local operator (k >= 1)")
    if t < (2 * math.e) ** (k / 2) - 1e-12:
        raise ValueError(f"t = {t} below (2e)^(k/2) = {(2 * math.e) ** (k / 2)} for k = {k}")
    return leq(tail_fraction(sp, t), tail_bound(k, t), 0.0, k=k, t=t)


def check_q_hyper(m: HermitianOperator, q: float, p: float | None = None,
                  sp: Spectrum | None = None) -> CheckReport:
    """``||M||_q <= (q-1)^{k/2} ||M||_2`` and, with ``p`` given, ``||M||_p >= (p-1)^{k/2} ||M||_2``."""
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    sp = sp or spectrum(m)
    k = locality(pauli_decompose(m))
    two = schatten_norm(m, 2, sp)
    factor = 1.0 if math.isinf(q) and k == 0 else (q - 1) ** (k / 2)
    upper = leq(schatten_norm(m, q, sp), factor * two, 1e-9, q=q, k=k)
    if p is None:
        return upper
    if not 1 <= p <= 2:
        raise ValueError(f"p must lie in [1, 2], got {p}")
    lower = leq((p - 1) ** (k / 2) * two, schatten_norm(m, p, sp), 1e-9, p=p, k=k)
    worst = upper if upper.margin <= lower.margin else lower
    return CheckReport(worst.lhs, worst.rhs, 1e-9, {
        "q": q, "p": p, "k": k, "upper": upper.as_dict(), "lower": lower.as_dict(),
        "both_hold": upper.holds and lower.holds,
    })


def numerical_rank(sp: Spectrum) -> int:
    lam = np.abs(sp.eigenvalues)
    return int(np.count_nonzero(lam > 1e-8 * lam.max()))


def check_rank_bound(m: HermitianOperator) -> CheckReport:
    """Rank of a nonzero k-local operator against ``2^(n - 2 log2(e) k)``."""
    sp = spectrum(m)
    if float(np.max(np.abs(sp.eigenvalues))) == 0.0:
        raise ValueError("rank bound needs a nonzero operator")
    k = locality(pauli_decompose(m))
    bound = 2.0 ** (m.n_qubits - 2 * math.log2(math.e) * k)
    return leq(bound, numerical_rank(sp), 0.0, k=k)


def _check_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise ValueError("state vector must have unit norm")
    return psi


def survival_amplitude(h: HermitianOperator, psi, t: float, sp: Spectrum | None = None) -> float:
    psi = _check_state(psi)
    sp = sp if sp is not None and sp.eigenvectors is not None else spectrum(h, with_vectors=True)
    weights = np.abs(sp.eigenvectors.conj().T @ psi) ** 2
    return float(abs(np.sum(np.exp(-1j * sp.eigenvalues * t) * weights)))


def high_energy_weight(sp: Spectrum, psi, mu: float) -> float:
    """``sum_{|lambda_k| > mu} |<v_k|psi>|^2``."""
    weights = np.abs(sp.eigenvectors.conj().T @ psi) ** 2
    return float(np.sum(weights[np.abs(sp.eigenvalues) > mu]))


def check_survival_bound(h: HermitianOperator, psi, t: float, mu: float,
                         sp: Spectrum | None = None) -> CheckReport:
    """``|<psi|e^{-iHt}|psi>| >= cos(mu t) - 2 sum_{|lambda_k| > mu} |<v_k|psi>|^2``.

    Valid only for ``mu |t| <= pi``: beyond that ``cos(lambda t) >= cos(mu t)``
    fails for some ``|lambda| <= mu`` and the inequality can break.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if mu * abs(t) > math.pi:
        raise ValueError(f"need mu |t| <= pi, got mu={mu}, t={t}")
    psi = _check_state(psi)
    sp = sp if sp is not None and sp.eigenvectors is not None else spectrum(h, with_vectors=True)
    two = float(np.sqrt(np.mean(sp.eigenvalues**2)))
    if abs(two - 1) > 1e-8:
        raise ValueError(f"Hamiltonian must have ||H||_2 = 1, got {two}")
    tail = high_energy_weight(sp, psi, mu)
    amp = survival_amplitude(h, psi, t, sp)
    return leq(math.cos(mu * t) - 2 * tail, amp, 1e-9, tail_weight=tail, mu=mu, t=t)


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def survival_experiment(h: HermitianOperator, t: float, mu: float, samples: int,
                        rng: np.random.Generator) -> dict:
    """Haar-random initial states: per-sample survival checks and the high-energy weight distribution."""
    sp = spectrum(h, with_vectors=True)
    reports = [check_survival_bound(h, haar_state(h.dim, rng), t, mu, sp) for _ in range(samples)]
    tails = np.array([r.extra["tail_weight"] for r in reports])
    high = np.abs(sp.eigenvalues) > mu
    return {
        "reports": reports,
        "all_hold": all(r.holds for r in reports),
        "tail_weight_mean": float(tails.mean()),
        "tail_weight_max": float(tails.max()),
        "tail_weight_quantiles": [float(x) for x in np.quantile(tails, [0.5, 0.9, 0.99])],
        "high_energy_fraction": float(np.count_nonzero(high)) / high.size,
    }


def all_strings(n: int):
    return ("".join(p) for p in product(LETTERS, repeat=n))

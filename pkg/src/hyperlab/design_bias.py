"""POVMs, projective t-design verification, and measurement-bias lower bounds.

A rank-one POVM ``M = (M_i)`` in dimension ``n`` has weights
``p_i = tr(M_i) / n`` and normalized projectors ``P_i = M_i / tr(M_i)``.
It is a ``t``-design when ``sum_i p_i P_i^{(x)t}`` equals the Haar average
of ``|psi><psi|^{(x)t}``.  Designs are inputs here, never constructed; the
bundled qubit POVMs are trusted only as far as :func:`check_design` says.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

from . import sphere_moments as sm
from .checks import CheckReport, leq

COMPLETENESS_TOL = 1e-9
PSD_TOL = 1e-9
DESIGN_TOL = 1e-9
BOUND_TOL = 1e-9
MAX_PRODUCT_DIM = 16
MAX_TUPLES = 100_000


class DesignError(ValueError):
    """Raised when a bound check needs a verified design and the POVM is not one."""


@dataclass(frozen=True, eq=False)
class Povm:
    dim: int
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = []
        for i, m in enumerate(self.operators):
            m = np.asarray(m, dtype=complex)
            if m.shape != (self.dim, self.dim):
                raise ValueError(f"element {i} has shape {m.shape}, expected ({self.dim}, {self.dim})")
            if np.max(np.abs(m - m.conj().T)) > PSD_TOL:
                raise ValueError(f"element {i} is not Hermitian")
            m = (m + m.conj().T) / 2
            if np.linalg.eigvalsh(m).min() < -PSD_TOL:
                raise ValueError(f"element {i} is not positive semidefinite")
            m.setflags(write=False)
            ops.append(m)
        if not ops:
            raise ValueError("POVM needs at least one element")
        object.__setattr__(self, "operators", tuple(ops))
        dev = self.completeness_deviation
        if dev > COMPLETENESS_TOL:
            raise ValueError(f"elements do not sum to the identity (max deviation {dev:.3g})")

    @classmethod
    def from_vectors(cls, vectors, weights) -> "Povm":
        """Rank-one POVM ``M_i = w_i |v_i><v_i|`` with each ``v_i`` normalized."""
        vecs = [np.asarray(v, dtype=complex) for v in vectors]
        if len(vecs) != len(weights):
            raise ValueError("vectors and weights differ in length")
        ops = []
        for v, w in zip(vecs, weights):
            v = v / np.linalg.norm(v)
            ops.append(float(w) * np.outer(v, v.conj()))
        return cls(len(vecs[0]), tuple(ops))

    @cached_property
    def completeness_deviation(self) -> float:
        return float(np.max(np.abs(sum(self.operators) - np.eye(self.dim))))

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([np.trace(m).real / self.dim for m in self.operators])

    @cached_property
    def projections(self) -> tuple[np.ndarray, ...]:
        return tuple(m / np.trace(m).real for m in self.operators)

    @cached_property
    def rank_one(self) -> bool:
        for m in self.operators:
            lam = np.linalg.eigvalsh(m)
            if np.count_nonzero(lam > 1e-9 * max(lam.max(), 1e-300)) != 1:
                return False
        return True

    def __len__(self) -> int:
        return len(self.operators)


@dataclass(frozen=True, eq=False)
class ProductPovm:
    parties: tuple[Povm, ...]

    def __post_init__(self):
        object.__setattr__(self, "parties", tuple(self.parties))
        if not self.parties:
            raise ValueError("product POVM needs at least one party")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(p.dim for p in self.parties)

    @property
    def equal_dims(self) -> bool:
        return len(set(self.dims)) == 1

    @property
    def outcome_count(self) -> int:
        return math.prod(len(p) for p in self.parties)


def mub_qubit_povm() -> Povm:
    """Eigenbases of X, Y, Z, each projector weighted 1/3 (the octahedron on the Bloch sphere)."""
    return _bloch_povm([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)])


def icosahedron_povm() -> Povm:
    """Twelve icosahedron vertices on the Bloch sphere, each projector weighted 1/6."""
    phi = (1 + math.sqrt(5)) / 2
    pts = []
    for a in (1, -1):
        for b in (phi, -phi):
            pts += [(0, a, b), (a, b, 0), (b, 0, a)]
    return _bloch_povm(pts)


def bloch_state(r) -> np.ndarray:
    x, y, z = np.asarray(r, dtype=float) / np.linalg.norm(r)
    theta = math.acos(max(-1.0, min(1.0, z)))
    phase = math.atan2(y, x)
    return np.array([math.cos(theta / 2), np.exp(1j * phase) * math.sin(theta / 2)])


def _bloch_povm(points) -> Povm:
    vecs = [bloch_state(r) for r in points]
    return Povm.from_vectors(vecs, [2 / len(vecs)] * len(vecs))


def design_deviation(m: Povm, t: int) -> float:
    """Max entrywise ``|sum_i p_i P_i^{(x)t} - E_psi |psi><psi|^{(x)t}|``."""
    if t < 1:
        raise ValueError("t must be >= 1")
    moment = np.zeros((m.dim**t, m.dim**t), dtype=complex)
    for p, proj in zip(m.weights, m.projections):
        moment += p * reduce(np.kron, [proj] * t)
    return float(np.max(np.abs(moment - sm.symmetric_projector(m.dim, t))))


def check_design(m: Povm, t: int) -> CheckReport:
    """Verify the ``t``-design property and every ``s < t`` below it."""
    if not 1 <= t <= 4:
        raise ValueError(f"t must lie in 1..4, got {t}")
    if not m.rank_one:
        raise DesignError("design checks need a rank-one POVM")
    devs = {s: design_deviation(m, s) for s in range(1, t + 1)}
    order = 0
    for s in range(1, t + 1):
        if devs[s] > DESIGN_TOL:
            break
        order = s
    return leq(max(devs.values()), 0.0, DESIGN_TOL, t=t, deviations=devs, design_order=order)


def design_order(m: Povm, max_t: int = 4) -> int:
    return check_design(m, max_t).extra["design_order"]


def require_design(m: Povm, t: int = 4) -> None:
    r = check_design(m, t)
    if not r.holds:
        raise DesignError(f"POVM is not a verified {t}-design (max deviation {r.lhs:.3g})")


def outcome_values(m: Povm | ProductPovm, d: sm.StateDifference) -> np.ndarray:
    """``tr(M_i Delta)`` for every outcome (a k-dimensional array for products)."""
    parties = m.parties if isinstance(m, ProductPovm) else (m,)
    dims = tuple(p.dim for p in parties)
    whole = len(parties) == 1 and dims[0] == d.dim
    if dims != tuple(d.dims) and not whole:
        raise ValueError(f"dimension mismatch: POVM {dims} vs Delta {d.dims}")
    count = math.prod(len(p) for p in parties)
    if count > MAX_TUPLES:
        raise ValueError(f"{count} outcome tuples exceed the limit of {MAX_TUPLES}")
    t = np.asarray(d.delta).reshape(dims * 2)
    k = len(parties)
    for j, party in enumerate(parties):
        stack = np.stack(party.operators)  # (m_j, a, b)
        # tr(M Delta) = sum_ab M[b, a] Delta[a, b]; contract the leading row/col pair
        t = np.tensordot(t, stack, axes=([0, k - j], [2, 1]))
    return np.real(t)


def measurement_bias(m: Povm | ProductPovm, d: sm.StateDifference) -> float:
    """``sum_i |tr(M_i Delta)|``, over outcome tuples for product POVMs."""
    return float(np.sum(np.abs(outcome_values(m, d))))


def trace_norm(d: sm.StateDifference) -> float:
    return float(np.sum(np.abs(np.linalg.eigvalsh(d.delta))))


def design_moment(m: Povm, d: sm.StateDifference, t: int) -> float:
    """``sum_i p_i (tr P_i Delta)^t``."""
    vals = np.array([np.trace(proj @ d.delta).real for proj in m.projections])
    return float(np.sum(m.weights * vals**t))


def _ratio(n: float, m2: float, m4: float) -> float:
    return 0.0 if m4 <= 0 else n * m2**1.5 / math.sqrt(m4)


@dataclass(frozen=True)
class ChainReport:
    bias: float
    design_ratio: float
    haar_ratio: float
    hyper_bound: float
    design_moments: tuple[float, float]
    haar_moments: tuple[float, float]
    steps: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(self.steps.values())


def fourth_moment_chain(m: Povm, d: sm.StateDifference) -> ChainReport:
    """Each step of ``bias >= n m2^{3/2}/m4^{1/2}`` (design sums = Haar moments) ``>= (n/9) m2^{1/2}``."""
    require_design(m, 4)
    if d.k != 1:
        raise ValueError("single-party chain; use check_multipartite_bound for products")
    n = m.dim
    bias = measurement_bias(m, d)
    dm2, dm4 = design_moment(m, d, 2), design_moment(m, d, 4)
    hm2, hm4 = sm.haar_moment(d, 2), sm.haar_moment(d, 4)
    design_ratio = _ratio(n, dm2, dm4)
    haar_ratio = _ratio(n, hm2, hm4)
    hyper_bound = n / 9 * math.sqrt(max(hm2, 0.0))
    steps = {
        "holder": bias >= design_ratio - BOUND_TOL,
        "design_m2": abs(dm2 - hm2) <= DESIGN_TOL,
        "design_m4": abs(dm4 - hm4) <= DESIGN_TOL,
        "design_ratio_eq_haar": abs(design_ratio - haar_ratio) <= DESIGN_TOL,
        "hypercontractive": haar_ratio >= hyper_bound - BOUND_TOL,
    }
    return ChainReport(bias, design_ratio, haar_ratio, hyper_bound, (dm2, dm4), (hm2, hm4), steps)


def unipartite_bound(d: sm.StateDifference) -> float:
    n = d.n
    tr = np.trace(d.delta).real  # 2p - 1 for a genuine state difference
    tr2 = np.trace(d.delta @ d.delta).real
    return math.sqrt(tr * tr + tr2) / (9 * math.sqrt(1 + 1 / n))


def check_unipartite_bound(m: Povm, d: sm.StateDifference) -> CheckReport:
    """``||Delta||_M >= ((1-2p)^2 + tr Delta^2)^{1/2} / (9 (1+1/n)^{1/2})`` for a 4-design."""
    require_design(m, 4)
    if d.k != 1:
        raise ValueError("unipartite bound needs k = 1")
    return leq(unipartite_bound(d), measurement_bias(m, d), BOUND_TOL)


def check_multipartite_bound(m: ProductPovm, d: sm.StateDifference) -> CheckReport:
    """``||Delta||_M >= (81(1+1/n))^{-k/2} ||Delta||_{2(k)}`` for a product of 4-designs.

    The intermediate step ``||Delta||_M >= (n/9)^k E[f^2]^{1/2}`` is checked
    too.  Unequal local dimensions use the per-party factors and are flagged
    as an extrapolation.
    """
    if tuple(m.dims) != tuple(d.dims):
        raise ValueError(f"dimension mismatch: POVM {m.dims} vs Delta {d.dims}")
    if d.dim > MAX_PRODUCT_DIM:
        raise ValueError(f"total dimension {d.dim} exceeds {MAX_PRODUCT_DIM}")
    if m.outcome_count > MAX_TUPLES:
        raise ValueError(f"{m.outcome_count} outcome tuples exceed {MAX_TUPLES}")
    for party in m.parties:
        require_design(party, 4)
    bias = measurement_bias(m, d)
    const = math.prod(81 * (1 + 1 / n) for n in m.dims) ** -0.5
    bound = const * sm.two_k_norm(d)
    m2 = sm.product_haar_moment(d, 2)
    intermediate = math.prod(n / 9 for n in m.dims) * math.sqrt(max(m2, 0.0))
    inter_ok = bias >= intermediate - BOUND_TOL
    report = leq(bound, bias, BOUND_TOL, intermediate=intermediate, intermediate_holds=inter_ok,
                 extrapolated=not m.equal_dims)
    if not inter_ok:
        # surface the failing step as the report's own comparison
        return leq(intermediate, bias, BOUND_TOL, **report.extra, bound=bound)
    return report


def product_power(m: Povm, k: int) -> ProductPovm:
    return ProductPovm(tuple([m] * k))


def z_half_power(k: int) -> sm.StateDifference:
    """``(|0><0| - |1><1|)^{(x)k} / 2^k``, the exponentially decaying example."""
    z = np.diag([0.5, -0.5])
    return sm.StateDifference.from_raw(2, k, reduce(np.kron, [z] * k))

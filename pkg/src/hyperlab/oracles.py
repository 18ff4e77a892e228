"""Independent reference computations used by the check suites.

Each one works from the defining formula and avoids the fast path it is
compared against.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

MAJ3_COEFFS = (0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, -0.5)


def popcount(a):
    return np.vectorize(lambda v: bin(int(v)).count("1"))(a)


def noise_expectation(values: np.ndarray, eps: float) -> np.ndarray:
    """``E_{y ~_eps x} f(y)`` with the flip kernel written out as a 2^n x 2^n matrix."""
    size = len(values)
    x = np.arange(size)
    d = popcount(x[:, None] ^ x[None, :])
    n = size.bit_length() - 1
    kernel = ((1 + eps) / 2) ** (n - d) * ((1 - eps) / 2) ** d
    return kernel @ values


def character_values(n: int, subset: int) -> np.ndarray:
    return (-1.0) ** popcount(np.arange(1 << n) & subset)


def channel_on_qubit(mat: np.ndarray, n: int, q: int, eps: float) -> np.ndarray:
    """``(1-eps) tr_q(M) (x) I/2 + eps M`` on qubit ``q`` (0-based, most significant first)."""
    t = mat.reshape((2,) * (2 * n))
    reduced = np.trace(t, axis1=q, axis2=n + q)
    full = np.multiply.outer(reduced, np.eye(2) / 2)
    rows = list(range(n - 1))
    cols = list(range(n - 1, 2 * n - 2))
    order = rows[:q] + [2 * n - 2] + rows[q:] + cols[:q] + [2 * n - 1] + cols[q:]
    return (1 - eps) * full.transpose(order).reshape(mat.shape) + eps * mat


def explicit_depolarize(mat: np.ndarray, n: int, eps: float) -> np.ndarray:
    for q in range(n):
        mat = channel_on_qubit(mat, n, q, eps)
    return mat


def sum_z_squared_levels(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues ``(n - 2w)^2`` of ``(sum Z_i)^2`` with multiplicities ``C(n, w)``."""
    w = np.arange(n + 1)
    return (n - 2 * w).astype(float) ** 2, np.array([math.comb(n, int(i)) for i in w])


def binomial_tail_fraction(n: int, scale: float, t: float) -> Fraction:
    """Exact fraction of eigenvalues of ``(sum Z)^2 / scale`` with absolute value >= t."""
    count = sum(math.comb(n, w) for w in range(n + 1) if (n - 2 * w) ** 2 / scale >= t)
    return Fraction(count, 2**n)


def qubit_diag_moment(a: float, b: float, t: int) -> float:
    """``E (a |psi_0|^2 + b |psi_1|^2)^t`` for Haar qubits: ``|psi_0|^2`` is uniform on [0, 1]."""
    if a == b:
        return a**t
    return (a ** (t + 1) - b ** (t + 1)) / ((t + 1) * (a - b))


"""Incremental inversion of the regularised Gram matrix ``aI + K``.

Appending one signal to the Gram matrix is a bordered-matrix extension: with
``P = aI + K`` (prefix), column ``k`` and corner ``s = K(x, x) + a`` the new
inverse is assembled from ``P^{-1}`` and the Schur scalar
``s - k' P^{-1} k``. The same scalar is the ratio of successive determinants,
so the log-determinant is carried along as a running sum of ``ln(schur)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "NumericalBreakdown",
    "RegularizedInverse",
    "init_inverse",
    "extend_inverse",
    "logdet_pd",
    "DetIdentity",
    "det_identity_check",
]

# Schur scalars at or below this fraction of the corner entry abort a run.
SCHUR_FLOOR = 1e-12


class NumericalBreakdown(ArithmeticError):
    """A pivot vanished: the kernel is not PSD or the system is hopelessly conditioned."""


@dataclass(frozen=True)
class RegularizedInverse:
    """``inv = (aI + K)^{-1}`` and ``logdet = ln det(aI + K)`` for a ``t x t`` Gram ``K``."""

    inv: NDArray[np.float64]
    logdet: float
    ridge: float

    @property
    def size(self) -> int:
        return self.inv.shape[0]

    @classmethod
    def empty(cls, ridge: float) -> "RegularizedInverse":
        _check_ridge(ridge)
        return cls(np.zeros((0, 0)), 0.0, float(ridge))


def _check_ridge(a: float) -> None:
    if not (np.isfinite(a) and a > 0):
        raise ValueError(f"ridge must be a positive finite number, got {a}")


def init_inverse(a: float, k_self: float) -> RegularizedInverse:
    """Base case ``t = 1``: ``inv = [1 / (a + k_self)]``."""
    _check_ridge(a)
    corner = a + k_self
    if not corner > 0:
        raise NumericalBreakdown(f"a + K(x, x) = {corner} is not positive")
    return RegularizedInverse(np.array([[1.0 / corner]]), math.log(corner), float(a))


def extend_inverse(
    prev: RegularizedInverse, k_cross: ArrayLike, k_self: float
) -> tuple[RegularizedInverse, float]:
    """Border ``prev`` with one more signal.

    Args:
        prev: inverse for the first ``t`` signals.
        k_cross: kernel values between the new signal and the first ``t``.
        k_self: kernel value of the new signal with itself.

    Returns:
        The ``(t+1) x (t+1)`` inverse and the Schur scalar
        ``k_self + a - k' prev.inv k``.

    Raises:
        NumericalBreakdown: the Schur scalar is not safely positive.
    """
    a = prev.ridge
    if prev.size == 0:
        new = init_inverse(a, k_self)
        return new, a + k_self
    k = np.asarray(k_cross, dtype=np.float64).reshape(-1)
    if k.shape[0] != prev.size:
        raise ValueError(f"k_cross has length {k.shape[0]}, expected {prev.size}")
    corner = k_self + a
    Pk = prev.inv @ k
    schur = corner - float(k @ Pk)
    if not schur > SCHUR_FLOOR * max(1.0, abs(corner)):
        raise NumericalBreakdown(
            f"Schur scalar {schur:.3e} at size {prev.size + 1}: kernel not PSD or "
            "Gram matrix numerically singular"
        )
    t = prev.size
    inv = np.empty((t + 1, t + 1))
    inv[:t, :t] = prev.inv + np.outer(Pk, Pk) / schur
    inv[:t, t] = -Pk / schur
    inv[t, :t] = inv[:t, t]
    inv[t, t] = 1.0 / schur
    # rounding in the rank-one term drifts asymmetric over many steps
    inv = 0.5 * (inv + inv.T)
    return RegularizedInverse(inv, prev.logdet + math.log(schur), a), schur


def logdet_pd(matrix: ArrayLike) -> float:
    """``ln det`` of a symmetric positive-definite matrix via Cholesky pivots."""
    M = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got {M.shape}")
    try:
        L = scipy.linalg.cholesky(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(f"matrix is not positive definite: {exc}") from None
    return float(2.0 * np.sum(np.log(np.diag(L))))


@dataclass(frozen=True)
class DetIdentity:
    lhs: float
    rhs: float
    passed: bool


def det_identity_check(M: ArrayLike, rtol: float = 1e-9) -> DetIdentity:
    """Compare ``det(I + M'M)`` with ``det(I + MM')`` for an ``n x m`` matrix ``M``."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    n, m = M.shape
    lhs = float(np.linalg.det(np.eye(m) + M.T @ M))
    rhs = float(np.linalg.det(np.eye(n) + M @ M.T))
    return DetIdentity(lhs, rhs, abs(lhs - rhs) <= rtol * max(1.0, abs(lhs)))

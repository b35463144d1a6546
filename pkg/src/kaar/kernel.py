"""Kernel functions, Gram matrices and a sampled positive-semidefiniteness check.

Kernels are deterministic pure functions of two signal vectors. Validity of a
user-supplied kernel (symmetry, positive semidefiniteness, a separable feature
space) is assumed, not proven; :func:`psd_spot_check` only samples it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "Kernel",
    "LinearKernel",
    "PolynomialKernel",
    "GaussianKernel",
    "FunctionKernel",
    "PsdCheck",
    "as_signal",
    "as_signals",
    "gram",
    "cross",
    "psd_spot_check",
    "parse_kernel",
]


def as_signal(x: ArrayLike) -> NDArray[np.float64]:
    """Coerce ``x`` to a finite 1-D float array."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"a signal must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal contains NaN or infinite coordinates")
    return arr


def as_signals(points: ArrayLike | Sequence[ArrayLike]) -> NDArray[np.float64]:
    """Stack a list of signals into a ``(t, n)`` array, checking dimensions."""
    if isinstance(points, np.ndarray) and points.ndim == 2:
        arr = np.asarray(points, dtype=np.float64)
    else:
        rows = [as_signal(p) for p in points]
        if not rows:
            return np.empty((0, 0))
        dims = {len(r) for r in rows}
        if len(dims) != 1:
            raise ValueError(f"signals have inconsistent dimensions {sorted(dims)}")
        arr = np.vstack(rows)
    if not np.all(np.isfinite(arr)):
        raise ValueError("signals contain NaN or infinite coordinates")
    return arr


class Kernel:
    """Base class for kernels.

    Subclasses implement :meth:`_block`, a vectorised evaluation on two
    stacks of signals. ``kernel(x, z)`` evaluates a single pair.
    """

    name = "kernel"

    def _block(self, X: NDArray[np.float64], Z: NDArray[np.float64]) -> NDArray[np.float64]:
        raise NotImplementedError

    def __call__(self, x1: ArrayLike, x2: ArrayLike) -> float:
        return self.eval(x1, x2)

    def eval(self, x1: ArrayLike, x2: ArrayLike) -> float:
        a, b = as_signal(x1), as_signal(x2)
        if a.shape != b.shape:
            raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
        # evaluate one canonical ordering so eval(x, z) == eval(z, x) bitwise
        if tuple(b) < tuple(a):
            a, b = b, a
        value = float(self._block(a[None, :], b[None, :])[0, 0])
        if not np.isfinite(value):
            raise ValueError(f"{self.spec()} produced a non-finite value")
        return value

    def block(self, X: ArrayLike, Z: ArrayLike) -> NDArray[np.float64]:
        """Kernel values between every row of ``X`` and every row of ``Z``."""
        X, Z = as_signals(X), as_signals(Z)
        if X.size and Z.size and X.shape[1] != Z.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
        if len(X) == 0 or len(Z) == 0:
            return np.zeros((len(X), len(Z)))
        out = self._block(X, Z)
        if not np.all(np.isfinite(out)):
            raise ValueError(f"{self.spec()} produced non-finite values")
        return out

    def diag(self, X: ArrayLike) -> NDArray[np.float64]:
        X = as_signals(X)
        return np.array([self._block(x[None, :], x[None, :])[0, 0] for x in X])

    def spec(self) -> str:
        """The kernel's selection string (see :func:`parse_kernel`)."""
        return self.name


@dataclass(frozen=True)
class LinearKernel(Kernel):
    """The plain scalar product ``x'z``."""

    name = "linear"

    def _block(self, X, Z):
        return X @ Z.T

    def diag(self, X):
        X = as_signals(X)
        return np.einsum("ij,ij->i", X, X)


@dataclass(frozen=True)
class PolynomialKernel(Kernel):
    """``(offset + x'z) ** degree``; the default offset of 1 gives ``(1 + x'z)^m``."""

    degree: int
    offset: float = 1.0
    name = "poly"

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"polynomial degree must be a positive integer, got {self.degree}")
        if not (np.isfinite(self.offset) and self.offset >= 0):
            raise ValueError(f"polynomial offset must be >= 0, got {self.offset}")

    def _block(self, X, Z):
        return (self.offset + X @ Z.T) ** int(self.degree)

    def diag(self, X):
        X = as_signals(X)
        return (self.offset + np.einsum("ij,ij->i", X, X)) ** int(self.degree)

    def spec(self) -> str:
        if self.offset == 1.0:
            return f"poly:{int(self.degree)}"
        return f"poly:{int(self.degree)}:{self.offset!r}"


@dataclass(frozen=True)
class GaussianKernel(Kernel):
    """``exp(-|x - z|^2 / (2 width^2))``."""

    width: float
    name = "rbf"

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise ValueError(f"gaussian width must be > 0, got {self.width}")

    def _block(self, X, Z):
        sq = (
            np.einsum("ij,ij->i", X, X)[:, None]
            + np.einsum("ij,ij->i", Z, Z)[None, :]
            - 2.0 * (X @ Z.T)
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.width**2))

    def diag(self, X):
        return np.ones(len(as_signals(X)))

    def spec(self) -> str:
        return f"rbf:{self.width!r}"


class FunctionKernel(Kernel):
    """Wraps a user function ``f(x, z) -> float``.

    The function is assumed symmetric and positive semidefinite; only
    :func:`psd_spot_check` looks at the second property.
    """

    def __init__(self, func: Callable[[NDArray, NDArray], float], name: str = "custom"):
        self.func = func
        self.name = name

    def _block(self, X, Z):
        out = np.empty((len(X), len(Z)))
        for i, x in enumerate(X):
            for j, z in enumerate(Z):
                a, b = (x, z) if tuple(x) <= tuple(z) else (z, x)
                out[i, j] = float(self.func(a, b))
        return out

    def __repr__(self):
        return f"FunctionKernel({self.name!r})"


def gram(kernel: Kernel, points: ArrayLike | Sequence[ArrayLike]) -> NDArray[np.float64]:
    """Gram matrix ``(K(x_i, x_j))_{i,j}`` of a non-empty list of signals.

    The upper triangle is mirrored so the result is exactly symmetric.
    The returned array is read-only.
    """
    X = as_signals(points)
    if len(X) == 0:
        raise ValueError("gram needs at least one point")
    G = kernel.block(X, X)
    G = np.triu(G) + np.triu(G, 1).T
    G.setflags(write=False)
    return G


def cross(kernel: Kernel, points: ArrayLike, x: ArrayLike) -> NDArray[np.float64]:
    """Column of kernel values ``(K(p, x) for p in points)``."""
    X = as_signals(points)
    x = as_signal(x)
    if len(X) == 0:
        return np.zeros(0)
    return kernel.block(X, x[None, :])[:, 0]


@dataclass(frozen=True)
class PsdCheck:
    passed: bool
    min_eigenvalue: float


def psd_spot_check(kernel: Kernel, sample: ArrayLike, tol: float = 1e-9) -> PsdCheck:
    """Check that the Gram matrix of ``sample`` has no eigenvalue below ``-tol``.

    This samples condition (ii) of a kernel; it is not a proof of validity.
    ``numpy.linalg.LinAlgError`` from the eigen-solver propagates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    G = gram(kernel, sample)
    min_eig = float(np.linalg.eigvalsh(G).min())
    return PsdCheck(passed=min_eig >= -tol, min_eigenvalue=min_eig)


def parse_kernel(text: str) -> Kernel:
    """Build a kernel from ``linear``, ``poly:<m>[:<offset>]`` or ``rbf:<width>``."""
    parts = text.strip().split(":")
    family = parts[0].lower()
    try:
        if family == "linear" and len(parts) == 1:
            return LinearKernel()
        if family == "poly" and len(parts) in (2, 3):
            degree = int(parts[1])
            offset = float(parts[2]) if len(parts) == 3 else 1.0
            return PolynomialKernel(degree, offset)
        if family == "rbf" and len(parts) == 2:
            return GaussianKernel(float(parts[1]))
    except ValueError as exc:
        raise ValueError(f"bad kernel string {text!r}: {exc}") from None
    raise ValueError(f"bad kernel string {text!r}; expected linear, poly:<m>[:<offset>] or rbf:<width>")

"""Online regressors under the predict-then-observe protocol.

* :class:`KAAR` - kernel Aggregating Algorithm Regression, run incrementally
  through the bordered-inverse engine in :mod:`kaar.algebra`.
* :class:`AAR` - the linear version, keeping ``A = aI + sum x x'`` and
  ``b = sum y x`` in the primal.
* batch and prequential kernel Ridge Regression, and fixed ("oblivious")
  kernel predictors used as comparators.

Predictions are never clipped unless :func:`clip_prediction` is applied by
the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from .algebra import RegularizedInverse, _check_ridge, extend_inverse
from .kernel import Kernel, as_signal, as_signals, cross, gram

__all__ = [
    "TrialRecord",
    "KaarPrediction",
    "KAAR",
    "AAR",
    "kaar_direct_prediction",
    "krr_fit",
    "krr_predict",
    "rr_prequential_predict",
    "ObliviousKernelPredictor",
    "sequence_loss",
    "clip_prediction",
]


@dataclass(frozen=True)
class TrialRecord:
    """One protocol step."""

    index: int
    signal: NDArray[np.float64]
    prediction: float
    outcome: float
    step_loss: float


@dataclass(frozen=True)
class KaarPrediction:
    """KAAR's prediction with the quantities it was computed from.

    ``gamma = ridge * rr_prediction / schur``, where ``rr_prediction`` is what
    Ridge Regression on the prefix predicts and ``schur`` is
    ``K(x, x) + a - k'(K + aI)^{-1}k``.
    """

    gamma: float
    schur: float
    rr_prediction: float


def _check_outcome(y: float) -> float:
    y = float(y)
    if not math.isfinite(y):
        raise ValueError(f"outcome must be finite, got {y}")
    return y


class KAAR:
    """Kernel Aggregating Algorithm Regression.

    Each step costs ``O(t^2)``: the prediction uses the stored inverse of the
    prefix ``aI + K`` and :meth:`update` borders it with the new signal.

    Args:
        kernel: similarity function on signals.
        ridge: regularisation ``a > 0``.

    Example:
        >>> from kaar.kernel import LinearKernel
        >>> model = KAAR(LinearKernel(), ridge=1.0)
        >>> model.predict([1.0]).gamma
        0.0
        >>> record = model.update([1.0], 1.0)
        >>> round(model.predict([1.0]).gamma, 12)
        0.333333333333
    """

    def __init__(self, kernel: Kernel, ridge: float = 1.0):
        _check_ridge(ridge)
        self.kernel = kernel
        self.ridge = float(ridge)
        self.signals: list[NDArray[np.float64]] = []
        self.outcomes: list[float] = []
        self.reg_inv = RegularizedInverse.empty(self.ridge)
        self.cum_loss = 0.0
        self.records: list[TrialRecord] = []
        self._X = np.empty((0, 0))
        self._pending: tuple[NDArray, KaarPrediction, NDArray, float] | None = None

    @property
    def n_seen(self) -> int:
        return len(self.outcomes)

    @property
    def logdet(self) -> float:
        """Running ``ln det(aI + K)`` over the signals seen so far."""
        return self.reg_inv.logdet

    def kernel_column(self, x: ArrayLike) -> tuple[NDArray[np.float64], float]:
        """Kernel values of ``x`` against the seen signals, and ``K(x, x)``."""
        x = as_signal(x)
        if self.n_seen and x.shape[0] != self._X.shape[1]:
            raise ValueError(f"signal has dimension {x.shape[0]}, expected {self._X.shape[1]}")
        k = cross(self.kernel, self._X, x) if self.n_seen else np.zeros(0)
        return k, float(self.kernel.diag(x[None, :])[0])

    def predict(self, x: ArrayLike) -> KaarPrediction:
        """Predict the outcome for ``x``; the state is not changed."""
        x = as_signal(x)
        k, k_self = self.kernel_column(x)
        a = self.ridge
        if self.n_seen == 0:
            pred = KaarPrediction(0.0, k_self + a, 0.0)
        else:
            Pk = self.reg_inv.inv @ k
            r = float(np.asarray(self.outcomes) @ Pk)
            schur = k_self + a - float(k @ Pk)
            pred = KaarPrediction(a * r / schur, schur, r)
        self._pending = (x, pred, k, k_self)
        return pred

    def update(self, x: ArrayLike, y: float) -> TrialRecord:
        """Reveal outcome ``y`` for ``x``, charge the loss and absorb the pair.

        The prediction made for ``x`` by the last :meth:`predict` call is the
        one charged; if there was none it is computed first.
        """
        x = as_signal(x)
        y = _check_outcome(y)
        pending = self._pending
        if pending is None or pending[0].shape != x.shape or not np.array_equal(pending[0], x):
            self.predict(x)
            pending = self._pending
        _, pred, k, k_self = pending
        self._pending = None
        self.reg_inv, _ = extend_inverse(self.reg_inv, k, k_self)
        self.signals.append(x)
        self._X = np.vstack([self._X, x[None, :]]) if self._X.size else x[None, :].copy()
        self.outcomes.append(y)
        loss = (y - pred.gamma) ** 2
        self.cum_loss += loss
        record = TrialRecord(len(self.records) + 1, x, pred.gamma, y, loss)
        self.records.append(record)
        return record

    def run(self, data: Iterable[tuple[ArrayLike, float]]) -> list[TrialRecord]:
        """Predict-then-update over a sequence of ``(signal, outcome)`` pairs."""
        out = []
        for x, y in data:
            self.predict(x)
            out.append(self.update(x, y))
        return out


class AAR:
    """Aggregating Algorithm Regression on ``R^n``.

    ``A`` absorbs ``x x'`` before predicting, exactly in protocol order, so
    the first prediction is 0 and ``A`` is positive definite for ``a > 0``.
    """

    def __init__(self, dim: int, ridge: float = 1.0):
        _check_ridge(ridge)
        self.dim = int(dim)
        self.ridge = float(ridge)
        self.A = self.ridge * np.eye(self.dim)
        self.b = np.zeros(self.dim)
        self.cum_loss = 0.0
        self.records: list[TrialRecord] = []
        self._pending: tuple[NDArray, float] | None = None

    def predict(self, x: ArrayLike) -> float:
        x = as_signal(x)
        if x.shape[0] != self.dim:
            raise ValueError(f"signal has dimension {x.shape[0]}, expected {self.dim}")
        if self._pending is not None:
            raise RuntimeError("predict called twice without an update")
        self.A += np.outer(x, x)
        gamma = float(self.b @ scipy.linalg.solve(self.A, x, assume_a="pos"))
        self._pending = (x, gamma)
        return gamma

    def update(self, y: float) -> TrialRecord:
        if self._pending is None:
            raise RuntimeError("update called before predict")
        y = _check_outcome(y)
        x, gamma = self._pending
        self._pending = None
        self.b += y * x
        loss = (y - gamma) ** 2
        self.cum_loss += loss
        record = TrialRecord(len(self.records) + 1, x, gamma, y, loss)
        self.records.append(record)
        return record

    def run(self, data: Iterable[tuple[ArrayLike, float]]) -> list[TrialRecord]:
        out = []
        for x, y in data:
            self.predict(x)
            out.append(self.update(y))
        return out


def kaar_direct_prediction(kernel: Kernel, ridge: float, prefix, x: ArrayLike) -> float:
    """KAAR's prediction straight from the matrix form, in ``O(t^3)``.

    Solves ``(aI + K~) v = k~`` over the prefix signals plus ``x`` and returns
    ``Y~' v`` with the outcome vector padded by a zero for ``x``.
    """
    _check_ridge(ridge)
    x = as_signal(x)
    X, y = _split(prefix)
    Xt = np.vstack([X, x[None, :]]) if len(X) else x[None, :]
    K = gram(kernel, Xt)
    kt = cross(kernel, Xt, x)
    v = scipy.linalg.solve(K + ridge * np.eye(len(Xt)), kt, assume_a="pos")
    return float(np.append(y, 0.0) @ v)


def _split(data) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    data = list(data)
    if not data:
        return np.empty((0, 0)), np.empty(0)
    X = as_signals([p[0] for p in data])
    y = np.array([_check_outcome(p[1]) for p in data])
    return X, y


def krr_fit(kernel: Kernel, ridge: float, data) -> NDArray[np.float64]:
    """Dual coefficients ``c = (K + aI)^{-1} y`` of kernel Ridge Regression."""
    _check_ridge(ridge)
    X, y = _split(data)
    if len(y) == 0:
        raise ValueError("krr_fit needs at least one example")
    K = gram(kernel, X)
    return scipy.linalg.solve(K + ridge * np.eye(len(y)), y, assume_a="pos")


def krr_predict(coefficients: ArrayLike, anchors, kernel: Kernel, x: ArrayLike) -> float:
    """``sum_i c_i K(anchor_i, x)``."""
    c = np.asarray(coefficients, dtype=np.float64).reshape(-1)
    A = as_signals(anchors)
    if len(c) != len(A):
        raise ValueError(f"{len(c)} coefficients for {len(A)} anchors")
    if len(c) == 0:
        return 0.0
    return float(c @ cross(kernel, A, x))


def rr_prequential_predict(kernel: Kernel, ridge: float, prefix, x: ArrayLike) -> float:
    """Ridge Regression trained on ``prefix`` and evaluated at ``x``; 0 on an empty prefix."""
    prefix = list(prefix)
    if not prefix:
        _check_ridge(ridge)
        as_signal(x)
        return 0.0
    c = krr_fit(kernel, ridge, prefix)
    return krr_predict(c, [p[0] for p in prefix], kernel, x)


@dataclass(frozen=True)
class ObliviousKernelPredictor:
    """The fixed function ``x -> sum_i c_i K(z_i, x)``."""

    kernel: Kernel
    coefficients: tuple[float, ...] = ()
    anchors: tuple[tuple[float, ...], ...] = field(default=())

    @classmethod
    def from_pairs(cls, kernel: Kernel, pairs: Sequence[tuple[float, ArrayLike]]):
        return cls(
            kernel,
            tuple(float(c) for c, _ in pairs),
            tuple(tuple(as_signal(z)) for _, z in pairs),
        )

    def __call__(self, x: ArrayLike) -> float:
        if not self.coefficients:
            return 0.0
        return krr_predict(self.coefficients, self.anchors, self.kernel, x)

    def regularizer(self, ridge: float) -> float:
        """``a * sum_ij c_i c_j K(z_i, z_j)``."""
        if not self.coefficients:
            return 0.0
        c = np.asarray(self.coefficients)
        return float(ridge * c @ gram(self.kernel, self.anchors) @ c)


def sequence_loss(predictor, data) -> float:
    """Total squared error of ``predictor`` on ``data``.

    ``predictor`` is a callable signal -> prediction; a list of
    :class:`TrialRecord` may be passed instead, with ``data=None``.
    """
    if data is None:
        total = 0.0
        for rec in predictor:
            total += rec.step_loss
        return total
    total = 0.0
    for x, y in data:
        total += (float(y) - predictor(x)) ** 2
    return total


def clip_prediction(gamma: float, bound: float) -> float:
    """Clamp a prediction to ``[-bound, bound]``. Not used by the certificates."""
    return min(max(gamma, -bound), bound)

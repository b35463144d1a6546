"""Loss-bound certificates for KAAR and the Ridge Regression relations.

KAAR's cumulative square loss on ``S`` is at most

    inf over (c, z) of [Loss_(c,z)(S) + a sum_ij c_i c_j K(z_i, z_j)]
        + Y^2 ln det(I + K~ / a),

with ``K~`` the Gram matrix of all signals in ``S``. The infimum is attained by
Ridge Regression's dual coefficients anchored at the data signals, with value
``a y'(K~ + aI)^{-1} y``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .algebra import _check_ridge, logdet_pd
from .kernel import Kernel, LinearKernel, as_signal, as_signals, cross, gram
from .predictors import KAAR, TrialRecord, _split, kaar_direct_prediction, krr_fit, krr_predict

__all__ = [
    "BoundHypothesisError",
    "ComparatorOptimum",
    "comparator_optimum",
    "logdet_term",
    "primal_logdet_term",
    "BoundCertificate",
    "theorem1_certificate",
    "running_certificate",
    "RelationReport",
    "relation_report",
]

CERTIFICATE_KEYS = (
    "actual_loss",
    "comparator_loss",
    "regularizer_term",
    "logdet_term",
    "bound_total",
    "slack",
    "y_bound",
    "y_bound_source",
)


class BoundHypothesisError(ValueError):
    """An outcome lies outside ``[-Y, Y]``, so the bound does not apply."""


@dataclass(frozen=True)
class ComparatorOptimum:
    value: float
    coefficients: NDArray[np.float64]
    loss: float
    regularizer: float


def comparator_optimum(kernel: Kernel, ridge: float, data) -> ComparatorOptimum:
    """Best regularised loss of any fixed kernel predictor on ``data``.

    With ``c = (K + aI)^{-1} y`` the residuals are ``Kc - y = -a c``, so the
    loss part is ``a^2 c'c`` and the regulariser ``a c'Kc``; they add up to
    ``a y'c``.
    """
    _check_ridge(ridge)
    X, y = _split(data)
    if len(y) == 0:
        raise ValueError("comparator_optimum needs at least one example")
    c = krr_fit(kernel, ridge, list(zip(X, y)))
    fitted = gram(kernel, X) @ c
    loss = float(np.sum((fitted - y) ** 2))
    value = float(ridge * (y @ c))
    return ComparatorOptimum(value, c, loss, value - loss)


def logdet_term(kernel: Kernel, ridge: float, signals, y_bound: float) -> float:
    """``Y^2 ln det(I + K~ / a)``; 0 for no signals."""
    _check_ridge(ridge)
    if y_bound <= 0:
        raise ValueError("y_bound must be positive")
    X = as_signals(signals)
    if len(X) == 0:
        return 0.0
    G = gram(kernel, X)
    return y_bound**2 * logdet_pd(np.eye(len(X)) + G / ridge)


def primal_logdet_term(ridge: float, signals, y_bound: float) -> float:
    """``Y^2 ln det(I + (1/a) sum_t x_t x_t')``, the ``n x n`` form for the linear kernel."""
    _check_ridge(ridge)
    X = as_signals(signals)
    if len(X) == 0:
        return 0.0
    return y_bound**2 * logdet_pd(np.eye(X.shape[1]) + X.T @ X / ridge)


@dataclass(frozen=True)
class BoundCertificate:
    """Every term of the loss bound, and how much room it leaves.

    ``primal_logdet_term`` is filled for the linear kernel only and is not
    serialised.
    """

    actual_loss: float
    comparator_loss: float
    regularizer_term: float
    logdet_term: float
    bound_total: float
    slack: float
    y_bound: float
    y_bound_source: str
    primal_logdet_term: float | None = None

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-6 * (1.0 + abs(self.bound_total))

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: d[k] for k in CERTIFICATE_KEYS}


def _resolve_y_bound(outcomes: NDArray, y_bound: float | None) -> tuple[float, str]:
    if y_bound is None:
        inferred = float(np.max(np.abs(outcomes))) if len(outcomes) else 0.0
        return inferred, "inferred"
    y_bound = float(y_bound)
    if not y_bound > 0:
        raise ValueError(f"y_bound must be positive, got {y_bound}")
    bad = np.flatnonzero(np.abs(outcomes) > y_bound)
    if bad.size:
        t = int(bad[0])
        raise BoundHypothesisError(
            f"outcome y_{t + 1} = {outcomes[t]} lies outside [-{y_bound}, {y_bound}]"
        )
    return y_bound, "declared"


def _assemble(actual, comp_loss, reg, ld, y_bound, source, primal=None) -> BoundCertificate:
    total = comp_loss + reg + ld
    return BoundCertificate(
        actual_loss=actual,
        comparator_loss=comp_loss,
        regularizer_term=reg,
        logdet_term=ld,
        bound_total=total,
        slack=total - actual,
        y_bound=y_bound,
        y_bound_source=source,
        primal_logdet_term=primal,
    )


def theorem1_certificate(
    run: Sequence[TrialRecord], kernel: Kernel, ridge: float, y_bound: float | None = None
) -> BoundCertificate:
    """Certificate for a completed KAAR run, computed from scratch.

    If ``y_bound`` is omitted it is taken as ``max |y_t|`` and the certificate
    is marked ``inferred``.

    Raises:
        BoundHypothesisError: some ``|y_t|`` exceeds a declared ``y_bound``.
    """
    _check_ridge(ridge)
    run = list(run)
    outcomes = np.array([r.outcome for r in run], dtype=np.float64)
    y_bound, source = _resolve_y_bound(outcomes, y_bound)
    actual = 0.0
    for r in run:
        actual += r.step_loss
    if not run:
        return _assemble(0.0, 0.0, 0.0, 0.0, y_bound, source)
    X = as_signals([r.signal for r in run])
    opt = comparator_optimum(kernel, ridge, list(zip(X, outcomes)))
    ld = logdet_term(kernel, ridge, X, y_bound) if y_bound > 0 else 0.0
    primal = None
    if isinstance(kernel, LinearKernel) and y_bound > 0:
        primal = primal_logdet_term(ridge, X, y_bound)
    return _assemble(actual, opt.loss, opt.regularizer, ld, y_bound, source, primal)


def running_certificate(model: KAAR, y_bound: float | None = None) -> BoundCertificate:
    """Certificate from a live :class:`KAAR` state in ``O(T^2)``.

    Reuses the model's stored inverse for the comparator and its telescoped
    log-determinant: ``ln det(I + K~/a) = ln det(aI + K~) - T ln a``.
    """
    outcomes = np.asarray(model.outcomes, dtype=np.float64)
    y_bound, source = _resolve_y_bound(outcomes, y_bound)
    if model.n_seen == 0:
        return _assemble(0.0, 0.0, 0.0, 0.0, y_bound, source)
    a = model.ridge
    c = model.reg_inv.inv @ outcomes
    value = float(a * (outcomes @ c))
    loss = float(a * a * (c @ c))
    ld = y_bound**2 * (model.logdet - model.n_seen * math.log(a))
    return _assemble(model.cum_loss, loss, value - loss, ld, y_bound, source)


@dataclass(frozen=True)
class RelationReport:
    """KAAR vs Ridge Regression at one trial.

    ``eq5_residual`` compares the matrix-form KAAR prediction with
    ``a y'(K + aI)^{-1}k / schur`` built from an explicit prefix inverse;
    ``eq6_residual`` with ``a r / schur`` where ``r`` comes from the
    Ridge Regression fit; ``eq4_residual`` (linear kernel only) with
    ``r / (1 + x'A^{-1}x)``, ``A = aI + sum_s x_s x_s'``.
    """

    gamma: float
    rr_prediction: float
    schur: float
    eq5_residual: float
    eq6_residual: float
    eq4_residual: float | None

    def within(self, rtol: float = 1e-10) -> bool:
        limit = rtol * (1.0 + abs(self.gamma))
        residuals = [self.eq5_residual, self.eq6_residual]
        if self.eq4_residual is not None:
            residuals.append(self.eq4_residual)
        return all(r <= limit for r in residuals)


def relation_report(prefix, x, kernel: Kernel, ridge: float) -> RelationReport:
    """Residuals of the KAAR / Ridge Regression identities for predicting ``x`` after ``prefix``."""
    _check_ridge(ridge)
    prefix = list(prefix)
    x = as_signal(x)
    a = ridge
    k_self = float(kernel.diag(x[None, :])[0])
    gamma = kaar_direct_prediction(kernel, a, prefix, x)
    if not prefix:
        schur = k_self + a
        eq4 = abs(gamma) if isinstance(kernel, LinearKernel) else None
        return RelationReport(gamma, 0.0, schur, abs(gamma), abs(gamma), eq4)

    X, y = _split(prefix)
    k = cross(kernel, X, x)
    P = scipy.linalg.inv(gram(kernel, X) + a * np.eye(len(y)))
    schur = k_self + a - float(k @ P @ k)
    eq5 = abs(gamma - a * float(y @ P @ k) / schur)

    r = krr_predict(krr_fit(kernel, a, prefix), X, kernel, x)
    eq6 = abs(gamma - a * r / schur)

    eq4 = None
    if isinstance(kernel, LinearKernel):
        A = a * np.eye(X.shape[1]) + X.T @ X
        q = float(x @ scipy.linalg.solve(A, x, assume_a="pos"))
        eq4 = abs(gamma - r / (1.0 + q))
    return RelationReport(gamma, r, schur, eq5, eq6, eq4)

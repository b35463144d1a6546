"""Kernel selection by the Complexity Approximation Principle.

For each candidate kernel index ``m`` the score is an upper bound on the
predictive complexity of the data (up to a constant common to all ``m``)::

    batch RR loss + Y^2 ln det(I + K~_m / a) + 2 Y^2 ln 2 * p(m)

where ``p(m) = log2 m + 2 log2 log2 m`` bounds the prefix complexity of ``m``.
``p(1)`` is taken as 0 and the inner logarithm is clamped at 1 (see
:func:`complexity_penalty`).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

from .algebra import _check_ridge
from .bounds import logdet_term
from .kernel import Kernel, PolynomialKernel, gram
from .predictors import KAAR, _split, krr_fit

__all__ = [
    "PENALTY_CONVENTION",
    "complexity_penalty",
    "CapScore",
    "cap_score",
    "cap_select",
    "polynomial_family",
]

PENALTY_CONVENTION = "p(1) = 0; p(m) = log2 m + 2 log2(max(log2 m, 1)) for m >= 2; additive constant dropped"


def complexity_penalty(m: int, y_bound: float) -> float:
    """``2 Y^2 ln 2 * p(m)``.

    >>> round(complexity_penalty(4, 1.0), 4)
    5.5452
    """
    if int(m) != m or m < 1:
        raise ValueError(f"model index must be a positive integer, got {m}")
    if m == 1:
        p = 0.0
    else:
        lg = math.log2(m)
        p = lg + 2.0 * math.log2(max(lg, 1.0))
    return 2.0 * y_bound**2 * math.log(2.0) * p


@dataclass(frozen=True)
class CapScore:
    m: int
    rr_loss: float
    logdet_term: float
    complexity_penalty: float
    total: float
    prequential_rr_loss: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def polynomial_family(offset: float = 1.0) -> Callable[[int], Kernel]:
    """``m -> (offset + x'z)^m``."""
    return lambda m: PolynomialKernel(m, offset)


def _prequential_rr_loss(kernel: Kernel, ridge: float, X, y) -> float:
    # the prefix RR prediction falls out of KAAR's step at no extra cost
    model = KAAR(kernel, ridge)
    total = 0.0
    for x, yt in zip(X, y):
        pred = model.predict(x)
        total += (yt - pred.rr_prediction) ** 2
        model.update(x, yt)
    return total


def cap_score(
    m: int,
    data,
    family: Callable[[int], Kernel],
    ridge: float,
    y_bound: float,
    prequential: bool = False,
) -> CapScore:
    """Score model ``m``; ``rr_loss`` is the train-on-all, evaluate-on-all loss.

    With ``prequential=True`` the online Ridge Regression loss is reported
    alongside; it does not enter ``total``.
    """
    _check_ridge(ridge)
    if not y_bound > 0:
        raise ValueError("y_bound must be positive")
    X, y = _split(data)
    kernel = family(m)
    penalty = complexity_penalty(m, y_bound)
    if len(y) == 0:
        return CapScore(m, 0.0, 0.0, penalty, penalty, 0.0 if prequential else None)
    c = krr_fit(kernel, ridge, list(zip(X, y)))
    resid = gram(kernel, X) @ c - y
    rr_loss = float(resid @ resid)
    ld = logdet_term(kernel, ridge, X, y_bound)
    preq = _prequential_rr_loss(kernel, ridge, X, y) if prequential else None
    return CapScore(m, rr_loss, ld, penalty, rr_loss + ld + penalty, preq)


def cap_select(
    data,
    family: Callable[[int], Kernel],
    m_range: Iterable[int],
    ridge: float,
    y_bound: float,
    prequential: bool = False,
    max_workers: int | None = None,
) -> tuple[int, list[CapScore]]:
    """Pick the ``m`` with the smallest total score.

    Ties go to the smaller ``m``. Returns the winner and all scores sorted
    by ``(total, m)``. Candidates are independent; ``max_workers > 1`` scores
    them in a thread pool with identical results.
    """
    ms = sorted(set(int(m) for m in m_range))
    if not ms:
        raise ValueError("m_range is empty")
    data = list(data)

    def score(m):
        return cap_score(m, data, family, ridge, y_bound, prequential)

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            scores = list(pool.map(score, ms))
    else:
        scores = [score(m) for m in ms]
    scores.sort(key=lambda s: (s.total, s.m))
    return scores[0].m, scores

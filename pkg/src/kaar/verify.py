"""Self-verification on random instances with a fixed seed.

Each check returns a :class:`CheckResult` holding the worst observed
discrepancy and the limit it was held to. ``run_all`` drives the ``verify``
command; the sizes default to a quick pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .algebra import RegularizedInverse, det_identity_check, extend_inverse, logdet_pd
from .bounds import comparator_optimum, running_certificate, theorem1_certificate
from .kernel import GaussianKernel, Kernel, LinearKernel, PolynomialKernel, cross, gram
from .predictors import AAR, KAAR, ObliviousKernelPredictor, krr_fit, krr_predict, sequence_loss

RIDGES = (0.1, 1.0, 10.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    limit: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst={self.worst:.3e} ({self.limit})"


def random_signals(rng: np.random.Generator, T: int, n: int) -> np.ndarray:
    """Points uniform in ``[-1, 1]^n`` scaled into the unit ball."""
    return rng.uniform(-1.0, 1.0, size=(T, n)) / np.sqrt(n)


def random_kernel(rng: np.random.Generator) -> Kernel:
    choice = rng.integers(4)
    return [LinearKernel(), PolynomialKernel(2), PolynomialKernel(3), GaussianKernel(0.5)][choice]


def check_theorem1(rng, runs=20, max_T=100, max_n=8, y_bound=1.0) -> tuple[CheckResult, CheckResult]:
    """Bound slack plus the matrix-form vs ``a r / schur`` identity at every step."""
    worst_slack = np.inf
    worst_rel = 0.0
    ok = True
    for _ in range(runs):
        kernel = random_kernel(rng)
        a = float(rng.choice(RIDGES))
        T = int(rng.integers(1, max_T + 1))
        n = int(rng.integers(1, max_n + 1))
        X = random_signals(rng, T, n)
        y = rng.uniform(-y_bound, y_bound, size=T)
        model = KAAR(kernel, a)
        for x, yt in zip(X, y):
            pred = model.predict(x)
            k, k_self = model.kernel_column(x)
            ext, _ = extend_inverse(model.reg_inv, k, k_self)
            kt = np.append(k, k_self)
            matrix_form = float(np.append(model.outcomes, 0.0) @ ext.inv @ kt)
            worst_rel = max(worst_rel, abs(matrix_form - pred.gamma) / (1 + abs(pred.gamma)))
            model.update(x, yt)
        cert = theorem1_certificate(model.records, kernel, a, y_bound)
        ok &= cert.holds
        worst_slack = min(worst_slack, cert.slack / (1 + abs(cert.bound_total)))
    return (
        CheckResult("theorem1 slack", ok, worst_slack, "slack >= -1e-6 (1 + bound)"),
        CheckResult("eq5/6 identity", worst_rel <= 1e-10, worst_rel, "<= 1e-10 (1 + |gamma|)"),
    )


def check_aar_equivalence(rng, runs=10, max_T=100, max_n=10) -> tuple[CheckResult, CheckResult]:
    """KAAR with the linear kernel against AAR, and the primal Ridge Regression relation."""
    worst = 0.0
    worst_eq4 = 0.0
    for _ in range(runs):
        a = float(rng.choice(RIDGES))
        T = int(rng.integers(1, max_T + 1))
        n = int(rng.integers(1, max_n + 1))
        X = random_signals(rng, T, n)
        y = rng.uniform(-1, 1, size=T)
        kaar, aar = KAAR(LinearKernel(), a), AAR(n, a)
        A_prev = a * np.eye(n)
        for x, yt in zip(X, y):
            g1 = kaar.predict(x)
            g2 = aar.predict(x)
            worst = max(worst, abs(g1.gamma - g2) / (1 + abs(g2)))
            q = float(x @ scipy.linalg.solve(A_prev, x, assume_a="pos"))
            worst_eq4 = max(worst_eq4, abs(g1.gamma - g1.rr_prediction / (1 + q)) / (1 + abs(g1.gamma)))
            kaar.update(x, yt)
            aar.update(yt)
            A_prev = A_prev + np.outer(x, x)
    return (
        CheckResult("KAAR(linear) == AAR", worst <= 1e-9, worst, "<= 1e-9 relative"),
        CheckResult("eq4 identity", worst_eq4 <= 1e-10, worst_eq4, "<= 1e-10 (1 + |gamma|)"),
    )


def check_det_identity(rng, count=100) -> CheckResult:
    worst = 0.0
    ok = True
    for _ in range(count):
        M = rng.uniform(-2, 2, size=(int(rng.integers(1, 9)), int(rng.integers(1, 6))))
        res = det_identity_check(M, rtol=1e-9)
        ok &= res.passed
        worst = max(worst, abs(res.lhs - res.rhs) / max(1.0, abs(res.lhs)))
    return CheckResult("det(I+M'M) == det(I+MM')", ok, worst, "<= 1e-9 relative")


def check_zero_pair(rng, runs=5, max_T=60) -> CheckResult:
    """KAAR's prediction equals batch RR on the prefix plus ``(x_t, 0)``."""
    worst = 0.0
    for _ in range(runs):
        kernel = random_kernel(rng)
        a = float(rng.choice(RIDGES))
        T = int(rng.integers(1, max_T + 1))
        X = random_signals(rng, T, int(rng.integers(1, 6)))
        y = rng.uniform(-1, 1, size=T)
        model = KAAR(kernel, a)
        for t, (x, yt) in enumerate(zip(X, y)):
            g = model.predict(x).gamma
            data = list(zip(X[: t + 1], np.append(y[:t], 0.0)))
            c = krr_fit(kernel, a, data)
            worst = max(worst, abs(g - krr_predict(c, X[: t + 1], kernel, x)))
            model.update(x, yt)
    return CheckResult("extra zero pair", worst <= 1e-10, worst, "<= 1e-10 absolute")


def check_incremental_inverse(rng, count=10, T=60) -> tuple[CheckResult, CheckResult]:
    worst_inv = 0.0
    worst_ld = 0.0
    for _ in range(count):
        kernel = random_kernel(rng)
        a = float(rng.choice(RIDGES))
        X = random_signals(rng, T, int(rng.integers(1, 9)))
        state = RegularizedInverse.empty(a)
        for t, x in enumerate(X):
            state, _ = extend_inverse(state, cross(kernel, X[:t], x), kernel.eval(x, x))
        M = gram(kernel, X) + a * np.eye(T)
        direct = np.linalg.inv(M)
        dist = np.linalg.norm(state.inv - direct) / (1 + np.linalg.norm(direct))
        worst_inv = max(worst_inv, dist)
        worst_ld = max(worst_ld, abs(state.logdet - logdet_pd(M)))
    return (
        CheckResult("incremental inverse", worst_inv <= 1e-8, worst_inv, "Frobenius <= 1e-8 (1 + |direct|)"),
        CheckResult("telescoped logdet", worst_ld <= 1e-8, worst_ld, "<= 1e-8 absolute"),
    )


def minimize_regularized_loss(K: np.ndarray, y: np.ndarray, a: float) -> float:
    """Numerically minimise ``|Kc - y|^2 + a c'Kc`` over ``c`` (BFGS, analytic gradient)."""

    def f(c):
        r = K @ c - y
        Kc = K @ c
        return r @ r + a * (c @ Kc), 2 * K @ r + 2 * a * Kc

    res = scipy.optimize.minimize(f, np.zeros(len(y)), jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 10000})
    return float(res.fun)


def check_comparator(rng, count=5, max_T=30, n_random=50) -> tuple[CheckResult, CheckResult]:
    worst = 0.0
    dominated = True
    for _ in range(count):
        kernel = random_kernel(rng)
        a = float(rng.choice(RIDGES))
        T = int(rng.integers(1, max_T + 1))
        n = int(rng.integers(1, 5))
        X = random_signals(rng, T, n)
        y = rng.uniform(-1, 1, size=T)
        data = list(zip(X, y))
        opt = comparator_optimum(kernel, a, data)
        numeric = minimize_regularized_loss(np.array(gram(kernel, X)), y, a)
        worst = max(worst, abs(opt.value - numeric) / max(abs(opt.value), 1e-300))
        for _ in range(n_random):
            m = int(rng.integers(1, 11))
            pred = ObliviousKernelPredictor.from_pairs(
                kernel, list(zip(rng.normal(size=m), random_signals(rng, m, n)))
            )
            dominated &= opt.value <= sequence_loss(pred, data) + pred.regularizer(a)
    return (
        CheckResult("comparator closed form vs minimiser", worst <= 1e-6, worst, "<= 1e-6 relative"),
        CheckResult("comparator below off-data predictors", dominated, 0.0, "all random predictors dominated"),
    )


def check_running_certificate(rng, runs=5, max_T=80) -> CheckResult:
    worst = 0.0
    for _ in range(runs):
        kernel = random_kernel(rng)
        a = float(rng.choice(RIDGES))
        T = int(rng.integers(1, max_T + 1))
        X = random_signals(rng, T, 3)
        y = rng.uniform(-1, 1, size=T)
        model = KAAR(kernel, a)
        model.run(zip(X, y))
        post = theorem1_certificate(model.records, kernel, a, 1.0)
        live = running_certificate(model, 1.0)
        worst = max(worst, abs(post.bound_total - live.bound_total) / (1 + abs(post.bound_total)))
    return CheckResult("running vs post-hoc certificate", worst <= 1e-8, worst, "<= 1e-8 relative")


def run_all(seed: int = 0, full: bool = False) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    if full:
        sizes = dict(t1=(200, 300), aar=(50, 200), zero=(20, 100), inc=50, comp=20)
    else:
        sizes = dict(t1=(20, 100), aar=(10, 100), zero=(5, 60), inc=10, comp=5)
    results = []
    results.extend(check_theorem1(rng, *sizes["t1"]))
    results.extend(check_aar_equivalence(rng, *sizes["aar"]))
    results.append(check_det_identity(rng))
    results.append(check_zero_pair(rng, *sizes["zero"]))
    results.extend(check_incremental_inverse(rng, sizes["inc"]))
    results.extend(check_comparator(rng, sizes["comp"]))
    results.append(check_running_certificate(rng))
    return results

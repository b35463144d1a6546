import json
import math

import numpy as np
import pytest

from kaar.bounds import (
    BoundHypothesisError,
    comparator_optimum,
    logdet_term,
    primal_logdet_term,
    relation_report,
    running_certificate,
    theorem1_certificate,
)
from kaar.kernel import FunctionKernel, GaussianKernel, LinearKernel, PolynomialKernel, gram
from kaar.predictors import KAAR, ObliviousKernelPredictor, sequence_loss
from kaar.verify import minimize_regularized_loss

HALF = FunctionKernel(lambda x, z: 1.0 if np.array_equal(x, z) else 0.5, name="half")
ZERO = FunctionKernel(lambda x, z: 0.0, name="zero")
S1 = [((1.0,), 1.0)]


def test_comparator_scalar_case():
    opt = comparator_optimum(LinearKernel(), 1.0, S1)
    # brute-force the 1-D objective (theta - 1)^2 + theta^2 on a fine grid
    theta = np.linspace(-2, 2, 400001)
    brute = np.min((theta - 1) ** 2 + theta**2)
    assert brute == pytest.approx(0.5, abs=1e-10)
    assert opt.value == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(opt.coefficients, [0.5], atol=1e-15)
    assert opt.loss == pytest.approx(0.25, abs=1e-15)
    assert opt.regularizer == pytest.approx(0.25, abs=1e-15)


def test_comparator_zero_outcomes(rng):
    X = rng.normal(size=(6, 2))
    opt = comparator_optimum(PolynomialKernel(2), 1.0, list(zip(X, np.zeros(6))))
    assert opt.value == 0.0
    assert not np.any(opt.coefficients)


@pytest.mark.parametrize("a", [10.0, 100.0, 1000.0])
def test_comparator_large_ridge_against_minimiser(a, rng):
    X = rng.uniform(-1, 1, size=(12, 2))
    y = rng.uniform(-1, 1, size=12)
    opt = comparator_optimum(GaussianKernel(1.0), a, list(zip(X, y)))
    numeric = minimize_regularized_loss(np.array(gram(GaussianKernel(1.0), X)), y, a)
    assert opt.value == pytest.approx(numeric, rel=1e-6)
    # heavy ridge: the optimum approaches doing nothing, i.e. y'y
    assert opt.value <= y @ y


def test_comparator_split_adds_up(kernel, rng):
    X = rng.uniform(-1, 1, size=(15, 3))
    y = rng.uniform(-1, 1, size=15)
    opt = comparator_optimum(kernel, 0.3, list(zip(X, y)))
    pred = ObliviousKernelPredictor.from_pairs(kernel, list(zip(opt.coefficients, X)))
    assert opt.loss == pytest.approx(sequence_loss(pred, zip(X, y)), rel=1e-9, abs=1e-12)
    assert opt.regularizer == pytest.approx(pred.regularizer(0.3), rel=1e-9, abs=1e-12)
    assert opt.loss + opt.regularizer == pytest.approx(opt.value, rel=1e-12)


def test_comparator_beats_off_data_predictors(kernel, rng):
    X = rng.uniform(-1, 1, size=(10, 2))
    y = rng.uniform(-1, 1, size=10)
    data = list(zip(X, y))
    opt = comparator_optimum(kernel, 1.0, data)
    for _ in range(50):
        m = int(rng.integers(1, 8))
        pred = ObliviousKernelPredictor.from_pairs(kernel, list(zip(rng.normal(size=m), rng.normal(size=(m, 2)))))
        assert opt.value <= sequence_loss(pred, data) + pred.regularizer(1.0)


def test_logdet_term_examples(rng):
    assert logdet_term(LinearKernel(), 1.0, [(1.0,)], 1.0) == pytest.approx(math.log(2), abs=1e-15)
    assert logdet_term(ZERO, 0.5, [(1.0,), (2.0,), (3.0,)], 1.0) == 0.0
    X = rng.normal(size=(8, 2))
    base = logdet_term(PolynomialKernel(2), 0.7, X, 1.0)
    assert logdet_term(PolynomialKernel(2), 0.7, X, 2.0) == 4 * base


def test_logdet_term_equals_shifted_logdet(kernel, rng):
    from kaar.algebra import logdet_pd

    X = rng.uniform(-1, 1, size=(20, 3))
    for a in (0.1, 1.0, 10.0):
        shifted = logdet_pd(gram(kernel, X) + a * np.eye(20)) - 20 * math.log(a)
        assert logdet_term(kernel, a, X, 1.5) == pytest.approx(1.5**2 * shifted, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("a", [0.1, 1.0, 10.0])
def test_dual_and_primal_logdet_agree(a, rng):
    for T, n in [(3, 7), (20, 4), (50, 1)]:
        X = rng.normal(size=(T, n))
        assert abs(logdet_term(LinearKernel(), a, X, 1.0) - primal_logdet_term(a, X, 1.0)) <= 1e-8


def test_certificate_worked_case():
    model = KAAR(LinearKernel(), 1.0)
    model.run(S1)
    cert = theorem1_certificate(model.records, LinearKernel(), 1.0, 1.0)
    assert cert.actual_loss == 1.0
    assert cert.comparator_loss + cert.regularizer_term == pytest.approx(0.5, abs=1e-15)
    assert cert.logdet_term == pytest.approx(math.log(2), abs=1e-15)
    assert cert.bound_total == pytest.approx(0.5 + math.log(2), abs=1e-15)
    assert cert.slack == pytest.approx(math.log(2) - 0.5, abs=1e-15)
    assert cert.y_bound_source == "declared"
    assert cert.primal_logdet_term == pytest.approx(math.log(2), abs=1e-15)


def test_certificate_empty_run():
    cert = theorem1_certificate([], LinearKernel(), 1.0, 1.0)
    assert (cert.actual_loss, cert.comparator_loss, cert.regularizer_term) == (0.0, 0.0, 0.0)
    assert (cert.logdet_term, cert.bound_total, cert.slack) == (0.0, 0.0, 0.0)


def test_certificate_total_is_sum_of_terms(kernel, rng):
    X = rng.uniform(-1, 1, size=(40, 3)) / np.sqrt(3)
    y = rng.uniform(-1, 1, size=40)
    model = KAAR(kernel, 1.0)
    model.run(zip(X, y))
    cert = theorem1_certificate(model.records, kernel, 1.0, 1.0)
    assert cert.bound_total == cert.comparator_loss + cert.regularizer_term + cert.logdet_term
    assert cert.slack == cert.bound_total - cert.actual_loss
    assert cert.holds


def test_certificate_linear_random_run(rng):
    X = rng.uniform(-1, 1, size=(100, 3))
    y = rng.uniform(-1, 1, size=100)
    model = KAAR(LinearKernel(), 1.0)
    model.run(zip(X, y))
    cert = theorem1_certificate(model.records, LinearKernel(), 1.0, 1.0)
    assert cert.slack >= 0
    assert abs(cert.logdet_term - cert.primal_logdet_term) <= 1e-8


def test_certificate_rejects_outcome_above_bound():
    model = KAAR(LinearKernel(), 1.0)
    model.run([((1.0,), 0.5), ((2.0,), 1.5)])
    with pytest.raises(BoundHypothesisError, match="y_2"):
        theorem1_certificate(model.records, LinearKernel(), 1.0, 1.0)


def test_certificate_infers_y_bound(rng):
    model = KAAR(LinearKernel(), 1.0)
    model.run(zip(rng.normal(size=(10, 2)), [0.1, -0.7, 0.3, 0.2, 0.0, 0.4, -0.2, 0.6, 0.1, 0.5]))
    cert = theorem1_certificate(model.records, LinearKernel(), 1.0)
    assert cert.y_bound == 0.7
    assert cert.y_bound_source == "inferred"


def test_certificate_json_keys():
    model = KAAR(LinearKernel(), 1.0)
    model.run(S1)
    doc = theorem1_certificate(model.records, LinearKernel(), 1.0, 1.0).to_dict()
    assert list(doc) == [
        "actual_loss",
        "comparator_loss",
        "regularizer_term",
        "logdet_term",
        "bound_total",
        "slack",
        "y_bound",
        "y_bound_source",
    ]
    assert json.loads(json.dumps(doc)) == doc


def test_running_certificate_matches_post_hoc(kernel, rng):
    X = rng.uniform(-1, 1, size=(60, 2))
    y = rng.uniform(-1, 1, size=60)
    model = KAAR(kernel, 0.5)
    model.run(zip(X, y))
    post = theorem1_certificate(model.records, kernel, 0.5, 1.0)
    live = running_certificate(model, 1.0)
    assert live.actual_loss == post.actual_loss
    for field in ("comparator_loss", "regularizer_term", "logdet_term", "bound_total"):
        assert getattr(live, field) == pytest.approx(getattr(post, field), rel=1e-8, abs=1e-10)


def test_relations_worked_case():
    rep = relation_report(S1, (1.0,), LinearKernel(), 1.0)
    assert rep.gamma == pytest.approx(1 / 3, abs=1e-15)
    assert rep.rr_prediction == pytest.approx(0.5, abs=1e-15)
    assert rep.schur == pytest.approx(1.5, abs=1e-15)
    assert rep.eq5_residual <= 1e-15 and rep.eq6_residual <= 1e-15 and rep.eq4_residual <= 1e-15


def test_relations_empty_prefix():
    rep = relation_report([], (2.0,), LinearKernel(), 1.0)
    assert rep.gamma == rep.rr_prediction == 0.0
    assert rep.eq5_residual == rep.eq6_residual == rep.eq4_residual == 0.0


def test_relations_half_kernel():
    rep = relation_report([((0.0,), 1.0)], (1.0,), HALF, 1.0)
    assert rep.gamma == pytest.approx(2 / 15, abs=1e-15)
    assert rep.rr_prediction == pytest.approx(0.25, abs=1e-15)
    assert rep.schur == pytest.approx(15 / 8, abs=1e-15)
    assert max(rep.eq5_residual, rep.eq6_residual) <= 1e-12
    assert rep.eq4_residual is None


def test_relations_random(kernel, rng):
    X = rng.uniform(-1, 1, size=(25, 2))
    y = rng.uniform(-1, 1, size=25)
    for t in range(25):
        assert relation_report(list(zip(X[:t], y[:t])), X[t], kernel, 0.4).within(1e-10)

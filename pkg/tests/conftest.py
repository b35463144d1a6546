import numpy as np
import pytest

from kaar.kernel import GaussianKernel, LinearKernel, PolynomialKernel

REGISTERED = [LinearKernel(), PolynomialKernel(2), PolynomialKernel(3), PolynomialKernel(2, 0.0), GaussianKernel(0.7)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=REGISTERED, ids=lambda k: k.spec())
def kernel(request):
    return request.param

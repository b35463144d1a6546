"""
How far is KAAR from the best fixed kernel predictor?
=====================================================

The certificate lists every term of the competitive bound: the best
regularised loss of a fixed predictor ``x -> sum c_i K(z_i, x)``, the
log-determinant price for learning online, and the slack left over.
"""

import math

import numpy as np

from kaar import KAAR, LinearKernel, PolynomialKernel, running_certificate, theorem1_certificate

# the smallest case can be done by hand: one trial, x = 1, y = 1, a = 1
model = KAAR(LinearKernel(), ridge=1.0)
model.run([((1.0,), 1.0)])
cert = theorem1_certificate(model.records, LinearKernel(), 1.0, y_bound=1.0)
print(cert.to_dict())
print("ln 2 - 1/2 =", math.log(2) - 0.5)

# a longer run with a polynomial kernel
rng = np.random.default_rng(1)
X = rng.uniform(-1, 1, size=(200, 2))
y = np.clip(X[:, 0] * X[:, 1] * 3 + rng.normal(0, 0.1, 200), -1, 1)
kernel = PolynomialKernel(2)
model = KAAR(kernel, ridge=0.5)
model.run(zip(X, y))

cert = theorem1_certificate(model.records, kernel, 0.5, y_bound=1.0)
for key, value in cert.to_dict().items():
    print(f"{key:>18}: {value}")

# the live state gives the same numbers without rebuilding the Gram matrix
live = running_certificate(model, y_bound=1.0)
print("running certificate bound:", live.bound_total)

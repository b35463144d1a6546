"""
Online prediction with KAAR and AAR
===================================

Signals arrive one at a time; each predictor commits to a prediction before
the outcome is revealed. With the linear kernel KAAR and AAR make the same
predictions, computed in the dual and in the primal respectively.
"""

import numpy as np

from kaar import AAR, KAAR, GaussianKernel, LinearKernel

rng = np.random.default_rng(0)
T, n = 300, 3
X = rng.uniform(-1, 1, size=(T, n))
y = np.clip(np.sin(3 * X[:, 0]) * X[:, 1] + rng.normal(0, 0.1, T), -1, 1)

# the linear pair: dual (KAAR) and primal (AAR)
kaar_lin = KAAR(LinearKernel(), ridge=1.0)
aar = AAR(n, ridge=1.0)
gap = 0.0
for x, yt in zip(X, y):
    g_dual = kaar_lin.predict(x).gamma
    g_primal = aar.predict(x)
    gap = max(gap, abs(g_dual - g_primal))
    kaar_lin.update(x, yt)
    aar.update(yt)
print(f"largest KAAR(linear) / AAR disagreement: {gap:.2e}")
print(f"cumulative loss, linear:   {kaar_lin.cum_loss:.3f}")

# a Gaussian kernel picks up the nonlinearity
kaar_rbf = KAAR(GaussianKernel(0.7), ridge=1.0)
kaar_rbf.run(zip(X, y))
print(f"cumulative loss, rbf:0.7:  {kaar_rbf.cum_loss:.3f}")

# loss over the last 100 trials shows the learning
tail = sum(r.step_loss for r in kaar_rbf.records[-100:])
print(f"rbf loss over the last 100 trials: {tail:.3f}")

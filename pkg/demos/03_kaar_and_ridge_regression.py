"""
KAAR and Ridge Regression
=========================

KAAR's prediction is Ridge Regression's prediction shrunk by the factor
``a / schur``, where ``schur = K(x, x) + a - k'(K + aI)^{-1} k`` measures how
new ``x`` is. Equivalently, KAAR is Ridge Regression trained with the extra
example ``(x, 0)``.
"""

import numpy as np

from kaar import GaussianKernel, KAAR, krr_fit, krr_predict, relation_report

rng = np.random.default_rng(2)
X = rng.uniform(-2, 2, size=(40, 1))
y = np.clip(np.cos(X[:, 0]), -1, 1)
kernel, a = GaussianKernel(0.5), 0.3

model = KAAR(kernel, a)
for t, (x, yt) in enumerate(zip(X, y)):
    p = model.predict(x)
    if t % 8 == 0:
        shrink = a / p.schur
        print(f"t={t + 1:>2}  RR={p.rr_prediction:+.4f}  shrink={shrink:.3f}  KAAR={p.gamma:+.4f}")
    model.update(x, yt)

# the extra zero example
x_new = np.array([0.25])
c = krr_fit(kernel, a, list(zip(X, y)) + [(x_new, 0.0)])
print("RR with (x, 0) appended:", krr_predict(c, np.vstack([X, x_new]), kernel, x_new))
print("KAAR:                   ", model.predict(x_new).gamma)

rep = relation_report(list(zip(X, y)), x_new, kernel, a)
print("identity residuals:", rep.eq5_residual, rep.eq6_residual)

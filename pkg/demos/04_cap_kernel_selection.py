"""
Choosing a polynomial degree with CAP
=====================================

Each degree m is scored by batch Ridge Regression loss plus the
log-determinant term plus a penalty for describing m. Higher degrees fit
better but pay more in the other two terms.
"""

import numpy as np

from kaar import ObliviousKernelPredictor, PolynomialKernel, cap_select, polynomial_family

# a fixed cubic kernel predictor: 0.8 (4x^3 - 3x) written with four anchors
K3 = PolynomialKernel(3)
anchors = np.array([[-1.0], [-1 / 3], [1 / 3], [1.0]])
grid = np.linspace(-1, 1, 9)[:, None]
coef = np.linalg.lstsq(K3.block(grid, anchors), 0.8 * (4 * grid[:, 0] ** 3 - 3 * grid[:, 0]), rcond=None)[0]
truth = ObliviousKernelPredictor.from_pairs(K3, list(zip(coef, anchors)))

rng = np.random.default_rng(3)
X = rng.uniform(-1, 1, size=(200, 1))
y = np.clip([truth(x) for x in X] + rng.normal(0, 0.05, 200), -1, 1)

best, scores = cap_select(list(zip(X, y)), polynomial_family(), range(1, 9), ridge=1.0, y_bound=1.0, prequential=True)
print(f"{'m':>2} {'RR loss':>9} {'online RR':>10} {'logdet':>8} {'penalty':>8} {'total':>8}")
for s in sorted(scores, key=lambda s: s.m):
    print(f"{s.m:>2} {s.rr_loss:9.3f} {s.prequential_rr_loss:10.3f} {s.logdet_term:8.2f} {s.complexity_penalty:8.2f} {s.total:8.2f}")
print("selected degree:", best)

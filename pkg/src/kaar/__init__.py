"""Online kernel regression with competitive loss bounds.

KAAR, AAR and kernel Ridge Regression under the predict-then-observe
protocol, loss-bound certificates, and kernel selection by the Complexity
Approximation Principle.
"""

from .algebra import (
    NumericalBreakdown,
    RegularizedInverse,
    det_identity_check,
    extend_inverse,
    init_inverse,
    logdet_pd,
)
from .bounds import (
    BoundCertificate,
    BoundHypothesisError,
    comparator_optimum,
    logdet_term,
    relation_report,
    running_certificate,
    theorem1_certificate,
)
from .cap import CapScore, cap_score, cap_select, complexity_penalty, polynomial_family
from .kernel import (
    FunctionKernel,
    GaussianKernel,
    Kernel,
    LinearKernel,
    PolynomialKernel,
    gram,
    parse_kernel,
    psd_spot_check,
)
from .predictors import (
    AAR,
    KAAR,
    ObliviousKernelPredictor,
    TrialRecord,
    clip_prediction,
    kaar_direct_prediction,
    krr_fit,
    krr_predict,
    rr_prequential_predict,
    sequence_loss,
)

__version__ = "0.1.0"

"""Numerical toolkit for fractional multi-bubble reductions.

The subpackages cover the bubble family and its extensions (:mod:`.bubble`),
the two-circle configurations (:mod:`.configuration`), lattice sums and
interaction integrals (:mod:`.interactions`), the reduced energy
(:mod:`.energy`), its stationary point and box-face signs
(:mod:`.critical`), weighted Pohozaev identities (:mod:`.pohozaev`) and the
weighted sup norms (:mod:`.norms`).  :mod:`.checks` bundles the acceptance
checks used by the ``fracbubble verify`` command.
"""

from ._common import (
    DomainError,
    FracBubbleError,
    NumericError,
    ParameterError,
    QuadratureSpec,
    ResidualReport,
)
from .bubble import (
    BubbleSpec,
    KernelIndex,
    SpectralParams,
    bubble_nonlinear_image,
    bubble_value,
    extension_gradient_bound_check,
    extension_trace_derivative,
    extension_value,
    kernel_value,
    linearized_image,
)
from .configuration import (
    CylinderConfig,
    ParameterBox,
    build_cylinder_config,
    cross_circle_distance,
    mu_of_k,
    same_circle_distance,
    symmetry_residual,
)
from .critical import FlowState, boundary_sign_report, find_critical_point
from .energy import (
    ConstantsTable,
    PotentialModel,
    ReducedPoint,
    compute_constants,
    energy_direct,
    energy_expansion,
    grad_h,
    grad_lambda,
    solve_h0,
    solve_lambda0,
)
from .interactions import (
    SumSpec,
    d1_constant,
    interaction_constant_B0,
    lattice_sum_asymptotic,
    lattice_sum_exact,
    pairwise_interaction,
)
from .norms import (
    NormSpec,
    SampledField,
    convolution_estimate_check,
    dstar_norm,
    pair_product_bound_check,
    star_norm,
)
from .pohozaev import (
    FieldPair,
    HalfBallDomain,
    dilation_identity_residual,
    translation_identity_residual,
    weighted_hemisphere_integral,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

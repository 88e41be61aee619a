"""Walk through the single-bubble building blocks and the expansion constants.

Run with ``python demos/bubble_and_constants.py``.  Prints how closely the
extension of the bubble reproduces its own nonlinearity, then the table of
constants that enter the reduced energy for N = 3, s = 0.3.
"""

import numpy as np

from fracbubble import (
    BubbleSpec,
    PotentialModel,
    SpectralParams,
    bubble_nonlinear_image,
    compute_constants,
    extension_trace_derivative,
)

params = SpectralParams(3, 0.3)
spec = BubbleSpec()
print(f"N = {params.N}, s = {params.s}, critical power p = {params.p_crit:.4f}")

print("\nThe trace derivative of the extension should equal U^p pointwise:")
for radius in (0.0, 0.5, 1.0, 2.5, 5.0):
    y = np.array([radius, 0.0, 0.0])
    lhs = extension_trace_derivative(params, spec, y)
    rhs = bubble_nonlinear_image(params, spec, y)
    print(f"  |y| = {radius:3.1f}   trace derivative {lhs:.10f}   U^p {rhs:.10f}   rel gap {abs(lhs / rhs - 1):.1e}")

k = 50
C = compute_constants(params, PotentialModel.default(params), k=k)
print(f"\nExpansion constants at k = {k} (mu = {C.mu:.4g}, h0 = {C.h0:.4f}, m = {C.m}):")
for name, value, how in C.rows():
    print(f"  {name:<10s} {value: .8e}   [{how}]")

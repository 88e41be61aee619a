"""Balance the local Pohozaev identities and evaluate the weighted norms.

The first part compares both sides of the translation and dilation
identities on half-balls of radius 3 and 6.  The second part measures the
superposition of 2k bubbles in the weighted sup norms and shows that the
values settle as the sampling is refined.
"""

import numpy as np

from fracbubble import (
    FieldPair,
    HalfBallDomain,
    NormSpec,
    SampledField,
    SpectralParams,
    build_cylinder_config,
    dilation_identity_residual,
    dstar_norm,
    star_norm,
    translation_identity_residual,
)
from fracbubble.energy import PotentialModel, compute_constants, reference_point
from fracbubble.norms import configuration_field, sample_design

params = SpectralParams(3, 0.3)
origin = np.zeros(params.N)

print("translation identity, u = U, xi = Z1, K = 1")
for delta in (3.0, 6.0):
    rep = translation_identity_residual(FieldPair.bubble_and_kernel(params, 1), HalfBallDomain(origin, delta), None, 1)
    print(f"  delta {delta}: lhs {rep.lhs: .10f}  rhs {rep.rhs: .10f}  relative residual {rep.rel_residual:.2e}")

print("dilation identity, u = xi = U, K = 1, centred at the origin")
for delta in (3.0, 6.0):
    rep = dilation_identity_residual(FieldPair.bubble_with_itself(params), HalfBallDomain(origin, delta), None, origin)
    print(f"  delta {delta}: lhs {rep.lhs: .10f}  rhs {rep.rhs: .10f}  relative residual {rep.rel_residual:.2e}")

k = 16
C = compute_constants(params, PotentialModel.default(params), k=k)
ref = reference_point(params, C, k)
cfg = build_cylinder_config(params, k, ref.r, ref.h, ref.lam, m=C.m)
spec = NormSpec(params, cfg)
print(f"\nweighted norms of the {2 * k}-bubble sum (tau = {spec.tau:.4f})")
for density in (1, 2):
    pts = sample_design(cfg, density)
    W = SampledField(pts, configuration_field(params, cfg, pts))
    Wp = SampledField(pts, configuration_field(params, cfg, pts, params.p_crit - 1))
    print(f"  density {density}: {len(pts):6d} samples  ||W||_* = {star_norm(W, spec):.6f}"
          f"  ||W^(p-1)||_** = {dstar_norm(Wp, spec):.6f}")

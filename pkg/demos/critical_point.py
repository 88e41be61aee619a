"""Locate the stationary point of the reduced energy and inspect the box faces.

For each k the solver starts at the centre of the admissible box; the
output shows where it lands relative to the leading-order prediction
(h0, Lambda0) and which face-sign statements hold at theta = 0.1.
"""

import sys

from fracbubble import PotentialModel, SpectralParams, boundary_sign_report, compute_constants, find_critical_point
from fracbubble.energy import reference_point

N, s = (int(sys.argv[1]), float(sys.argv[2])) if len(sys.argv) == 3 else (3, 0.3)
params = SpectralParams(N, s)
pot = PotentialModel.default(params)

for k in (16, 32, 64, 128):
    C = compute_constants(params, pot, k=k)
    ref = reference_point(params, C, k)
    state = find_critical_point(params, C, pot, k, return_state=True)
    pt = state.point
    print(f"k = {k:4d}: h = {pt.h:.6f} (h0 {ref.h:.6f})  Lambda = {pt.lam:.6f} (Lambda0 {ref.lam:.6f})"
          f"  r/mu = {pt.r / C.mu:.6f}  iterations {state.iterations}  |grad| {max(abs(state.grad)):.1e}")

k = 50
C = compute_constants(params, pot, k=k)
report = boundary_sign_report(params, C, k, theta_box=0.1)
print(f"\nface signs at k = {k}, theta = 0.1 (margins in units of k mu^-m):")
for face in report.faces:
    verdict = {True: "holds", False: "fails", None: "skipped"}[face.passed]
    print(f"  {face.name:<14s} {face.claim:<34s} min margin {face.min_margin: .3e}  {verdict}")

"""Exact lattice sums against their large-k asymptotics.

The same-circle sum should approach its asymptotic form at the rate 1/k^2,
while the cross-circle sum only converges once the circles are far apart
compared with the spacing on each circle (the product h k grows).
"""

import numpy as np

from fracbubble import SpectralParams, SumSpec, build_cylinder_config, lattice_sum_asymptotic, lattice_sum_exact

params = SpectralParams(3, 0.3)
tau = 3.0

print("same circle, tau = 3, h = 0.1")
ks, devs = [], []
for k in (16, 32, 64, 128, 256):
    cfg = build_cylinder_config(params, k, 1.0, 0.1)
    spec = SumSpec(tau, "same_circle")
    exact, approx = lattice_sum_exact(cfg, spec), float(lattice_sum_asymptotic(cfg, spec))
    ks.append(k)
    devs.append(abs(exact / approx - 1))
    print(f"  k = {k:4d}   exact {exact:.8e}   asymptotic {approx:.8e}   deviation {devs[-1]:.3e}")
slope = np.polyfit(np.log(ks), np.log(devs), 1)[0]
print(f"  fitted log-log slope {slope:.3f}")

print("\ncross circle, tau = 3, h tied to k")
for k in (16, 32, 64, 128, 256):
    h = k ** (-(params.tau - 1) / (params.tau + 1))
    cfg = build_cylinder_config(params, k, 1.0, h)
    spec = SumSpec(tau, "cross_circle")
    exact, approx = lattice_sum_exact(cfg, spec), lattice_sum_asymptotic(cfg, spec)
    print(f"  k = {k:4d}   h = {h:.4f}   h k = {h * k:6.2f}   ratio {exact / float(approx):.6f}")

"""How far the exponential map is from parallel transport.

On the unit sphere and the hyperboloid the gap |(T_s - P_s) sdot| has a
closed form in |s|; it is compared here with the general bound
K |s|^2 |sdot_perp| / 3 and with sampled values.
"""
import math

import numpy as np

from tangent_accel.manifolds import Hyperbolic, Sphere
from tangent_accel.verify import check_dexp_transport, comparison_fns

for M in (Sphere(3), Hyperbolic(3)):
    x = np.eye(3)[0]
    e2, e3 = np.eye(3)[1], np.eye(3)[2]
    print(M.name)
    for t in (0.1, 0.5, 1.0, 2.0):
        gap = M.norm(M.exp(x, t * e2), M.dexp(x, t * e2, e3) - M.transport(x, t * e2, e3))
        closed = comparison_fns(M.curvature.k_low, t)[2]
        print(f"  |s| = {t:3.1f}: gap {gap:.6f}, closed form {closed:.6f}, bound {t * t / 3:.6f}")
    rep = check_dexp_transport(M, 1000, rng=np.random.default_rng(0))
    print(f"  1000 random samples: max ratio to bound {rep.max_ratio:.3f}, "
          f"equality error {rep.extra['max_equality_error']:.1e}")
print(f"sphere cap pi = {math.pi:.4f} keeps the exponential map below the cut locus")

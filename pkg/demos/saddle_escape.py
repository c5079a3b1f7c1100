"""Escape a strict saddle of the Rayleigh quotient with perturbed TAGD.

The start is the middle eigenvector of A, where the gradient vanishes
exactly.  Plain TAGD stops there; the perturbed variant seeds its inner
loop with a tiny random tangent vector, slides off the saddle and ends
with a Hessian eigenvalue certificate.
"""
import math

import numpy as np

from tangent_accel import build_problem, derive_params, ptagd, tagd
from tangent_accel.problems import initial_point

prob = build_problem("rayleigh_sphere", n=50)
M = prob.manifold
x0 = initial_point(prob, "saddle")
eps = 1e-3
print(f"start: f = {prob.cost(x0):.4f}, |grad| = {np.linalg.norm(prob.riemannian_grad(x0)):.1e}, "
      f"f_low = {prob.f_low}")

p = derive_params(prob.lipschitz_L, prob.lipschitz_rho, M.curvature, eps)
run = tagd(prob, p, x0)
print(f"TAGD stops at once: t = {run.t}, f = {run.result_f:.4f}")

Delta_f = prob.cost(x0) - prob.f_low
pp = derive_params(prob.lipschitz_L, prob.lipschitz_rho, M.curvature, eps, d=M.dim,
                   delta=0.05, Delta_f=Delta_f)
run = ptagd(prob, pp, x0, 0.05, Delta_f, np.random.default_rng(0))
for rec in run.records[:6]:
    print(f"  t = {rec.t:6d}  {rec.case:14s} {rec.exit_case or '':16s} f = {rec.f_value:.6f}")
cert = run.certificate
print(f"PTAGD: f = {run.result_f:.2e} after t = {run.t}, |grad| = {cert['grad_norm']:.1e}")
print(f"lambda_min of the pullback Hessian = {cert['lambda_min']:.4f} "
      f">= -sqrt(rho_hat eps) = {-math.sqrt(pp.rho_hat * eps):.4f}")

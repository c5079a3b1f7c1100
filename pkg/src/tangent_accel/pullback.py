"""Pullbacks f o Exp_x, their gradients, and a Hessian eigenvalue certificate.

The gradient of the pullback follows from the chain rule,
``grad fhat_x(s) = T_s^* grad f(Exp_x(s))`` with ``T_s = DExp_x(s)``.
Every evaluation is recorded in a :class:`QueryCounters` object.
"""
from dataclasses import dataclass, field, fields
from typing import Callable, NamedTuple, Optional

import numpy as np

from .geometry import Manifold


@dataclass
class QueryCounters:
    """Oracle call counts for one run.

    ``certificate_queries`` counts the gradient evaluations spent on
    Hessian certificates; they are kept apart from the algorithm budget.
    """

    function_queries: int = 0
    gradient_queries: int = 0
    retraction_calls: int = 0
    certificate_queries: int = 0

    def copy(self):
        return QueryCounters(**self.as_dict())

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __sub__(self, other):
        return QueryCounters(**{k: v - getattr(other, k) for k, v in self.as_dict().items()})

    def __add__(self, other):
        return QueryCounters(**{k: v + getattr(other, k) for k, v in self.as_dict().items()})

    @property
    def total(self):
        return self.function_queries + self.gradient_queries


@dataclass(frozen=True)
class ProblemDef:
    """A cost on a manifold with its Riemannian gradient.

    ``lipschitz_L`` and ``lipschitz_rho`` are the gradient and Hessian
    Lipschitz constants when known, ``None`` otherwise.  ``sampler``
    draws representative points (used by the constant estimator and the
    verification suite); it defaults to ``manifold.random_point``.
    """

    manifold: Manifold
    cost: Callable
    riemannian_grad: Callable
    f_low: float
    lipschitz_L: Optional[float] = None
    lipschitz_rho: Optional[float] = None
    name: str = ""
    sampler: Optional[Callable] = None
    info: dict = field(default_factory=dict)

    def sample_point(self, rng):
        if self.sampler is not None:
            return self.sampler(rng)
        return self.manifold.random_point(rng)

    @property
    def has_constants(self):
        return self.lipschitz_L is not None and self.lipschitz_rho is not None


def pullback_value(prob, x, s, ctr=None):
    """f(Exp_x(s)); one function query and one retraction."""
    if ctr is not None:
        ctr.function_queries += 1
        ctr.retraction_calls += 1
    return float(prob.cost(prob.manifold.exp(x, s)))


def _pullback_grad(prob, x, s):
    M = prob.manifold
    y = M.exp(x, s)
    return M.dexp_adjoint(x, s, prob.riemannian_grad(y))


def pullback_grad(prob, x, s, ctr=None):
    """Gradient of the pullback at s, a tangent vector at x."""
    if ctr is not None:
        ctr.gradient_queries += 1
        ctr.retraction_calls += 1
    return _pullback_grad(prob, x, s)


def default_fd_step(prob, x):
    g = prob.riemannian_grad(x)
    return np.finfo(float).eps ** (1.0 / 3.0) * max(1.0, prob.manifold.norm(x, g))


def hess_vec_at_origin(prob, x, v, h=None, ctr=None):
    """Central difference estimate of Hess fhat_x(0)[v] for unit v."""
    M = prob.manifold
    nv = M.norm(x, v)
    if abs(nv - 1.0) > 1e-8:
        raise ValueError(f"v must be a unit tangent vector, got norm {nv}")
    if h is None:
        h = default_fd_step(prob, x)
    if not h > 0:
        raise ValueError(f"finite difference step must be positive, got {h}")
    if ctr is not None:
        ctr.certificate_queries += 2
    gp = _pullback_grad(prob, x, h * v)
    gm = _pullback_grad(prob, x, -h * v)
    return (gp - gm) / (2.0 * h)


class EigenEstimate(NamedTuple):
    value: float
    residual: float
    iterations: int
    converged: bool


def lambda_min_origin(prob, x, tol=1e-8, rng=None, max_iter=50, h=None, ctr=None):
    """Smallest eigenvalue of Hess fhat_x(0) by Lanczos in an orthonormal frame.

    Uses full reorthogonalization.  Stops when the Ritz residual drops
    below ``tol * max(1, |theta|)``, when the Krylov space is exhausted,
    or after ``max_iter`` steps (then ``converged`` is False).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    M = prob.manifold
    rng = np.random.default_rng(0) if rng is None else rng
    basis = M.basis(x)
    d = basis.shape[0]
    if h is None:
        h = default_fd_step(prob, x)

    def op(c):
        v = M.from_frame(basis, c)
        return M.frame_coords(x, basis, hess_vec_at_origin(prob, x, v, h, ctr))

    q = rng.standard_normal(d)
    q /= np.linalg.norm(q)
    Q = [q]
    alphas, betas = [], []
    best = EigenEstimate(np.inf, np.inf, 0, False)
    for k in range(min(max_iter, d)):
        w = op(Q[-1])
        a = float(np.dot(Q[-1], w))
        alphas.append(a)
        Qm = np.array(Q)
        w = w - Qm.T @ (Qm @ w)
        w = w - Qm.T @ (Qm @ w)
        beta = float(np.linalg.norm(w))
        T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        evals, evecs = np.linalg.eigh(T)
        theta = float(evals[0])
        res = abs(beta * evecs[-1, 0])
        done = res <= tol * max(1.0, abs(theta)) or k + 1 == d
        best = EigenEstimate(theta, res, k + 1, bool(done))
        if done or beta < 1e-300:
            best = best._replace(converged=True)
            break
        betas.append(beta)
        Q.append(w / beta)
    return best

"""Benchmark problems and a sampling estimator for Lipschitz constants.

Four problems are provided:

* ``rayleigh_sphere``: f(x) = x^T A x on the unit sphere.  Saddles are the
  interior eigenvectors; constants L = 2(lmax - lmin), rho = 4(lmax - lmin).
* ``quadratic_euclidean``: 1/2 (y - y*)^T Q (y - y*) with Q positive
  semidefinite.
* ``distsq_hyperbolic``: half the squared distance to a target point.
* ``karcher_spd``: the Karcher mean cost of N SPD matrices,
  (1/2N) sum_i dist^2(P, A_i).

The last two have curvature-dependent constants valid only on a ball
around the target; pass ``region_radius`` to attach them.
"""
import math

import numpy as np

from .exceptions import ConfigError
from .geometry import random_tangent_in_ball, random_unit_tangent
from .manifolds import SPD, Euclidean, Hyperbolic, Sphere, expm_sym, spd_eigh, sym
from .pullback import ProblemDef, hess_vec_at_origin

PROBLEMS = ("rayleigh_sphere", "karcher_spd", "distsq_hyperbolic", "quadratic_euclidean")


def parse_spectrum(spec, n):
    """Spectrum from a list or a string 'linspace:lo:hi', 'geomspace:lo:hi' or '1,2,3'."""
    if spec is None:
        spec = "linspace:0:1"
    if isinstance(spec, str):
        if ":" in spec:
            kind, lo, hi = spec.split(":")
            fn = {"linspace": np.linspace, "geomspace": np.geomspace}.get(kind)
            if fn is None:
                raise ConfigError(f"unknown spectrum kind {kind!r}")
            try:
                return fn(float(lo), float(hi), n)
            except ValueError as err:
                raise ConfigError(f"bad spectrum: {err}") from None
        try:
            spec = [float(v) for v in spec.split(",")]
        except ValueError as err:
            raise ConfigError(f"bad spectrum: {err}") from None
    lam = np.asarray(spec, dtype=float)
    if lam.shape != (n,):
        raise ConfigError(f"spectrum needs {n} values, got {lam.size}")
    return lam


def _coth_ratio(t):
    """t coth t with its limit 1 at t = 0."""
    if t < 1e-4:
        return 1.0 + t * t / 3.0
    return t / math.tanh(t)


def distsq_region_constants(radius, k=1.0):
    """Gradient and Hessian Lipschitz bounds of d^2/2 on a ball, curvature >= -k.

    With phi(r) = r coth r, the Hessian of d^2/2 is at most phi(sqrt(k) R)
    and its covariant derivative at most
    sqrt(k) * sqrt(phi'(r)^2 + ((phi(r) - 1) coth r)^2) at r = sqrt(k) R.
    """
    r = math.sqrt(k) * radius
    L = _coth_ratio(r)
    if r < 1e-4:
        return L, math.sqrt(k) * (2.0 * r / 3.0) * math.sqrt(2.0)
    coth = 1.0 / math.tanh(r)
    dphi = coth - r / math.sinh(r) ** 2
    rho = math.sqrt(k) * math.hypot(dphi, (L - 1.0) * coth)
    return L, rho


def rayleigh_sphere(n=50, spectrum=None, seed=0, rotate=False):
    lam = parse_spectrum(spectrum, n)
    Q = np.eye(n)
    if rotate:
        Q, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((n, n)))
    order = np.argsort(lam)
    lam = lam[order]
    Q = Q[:, order]
    A = (Q * lam) @ Q.T
    A = sym(A)
    M = Sphere(n)
    gap = float(lam[-1] - lam[0])

    def cost(x):
        return float(x @ A @ x)

    def grad(x):
        Ax = A @ x
        return 2.0 * (Ax - (x @ Ax) * x)

    L = 2.0 * gap if gap > 0 else None
    rho = 4.0 * gap if gap > 0 else None
    return ProblemDef(M, cost, grad, float(lam[0]), L, rho, "rayleigh_sphere",
                      info={"A": A, "spectrum": lam, "eigvecs": Q})


def quadratic_euclidean(n=10, spectrum=None, seed=0, target_scale=1.0):
    lam = parse_spectrum(spectrum if spectrum is not None else "linspace:0.1:1", n)
    if np.any(lam < 0):
        raise ConfigError("quadratic_euclidean needs a positive semidefinite Q")
    Q = np.diag(lam)
    rng = np.random.default_rng(seed)
    y_star = target_scale * rng.standard_normal(n)
    M = Euclidean(n)

    def cost(y):
        d = y - y_star
        return 0.5 * float(d @ Q @ d)

    def grad(y):
        return Q @ (y - y_star)

    top = float(lam.max())
    L = top if top > 0 else None
    return ProblemDef(M, cost, grad, 0.0, L, L, "quadratic_euclidean",
                      sampler=lambda r: y_star + r.standard_normal(n),
                      info={"Q": Q, "y_star": y_star})


def distsq_hyperbolic(n=10, seed=0, region_radius=None, sample_radius=1.0):
    M = Hyperbolic(n)
    rng = np.random.default_rng(seed)
    y_star = M.random_point(rng)

    def cost(x):
        return 0.5 * M.dist(x, y_star) ** 2

    def grad(x):
        return -M.log(x, y_star)

    def sampler(r):
        return M.exp(y_star, random_tangent_in_ball(M, y_star, sample_radius, r))

    L = rho = None
    if region_radius is not None:
        L, rho = distsq_region_constants(region_radius, 1.0)
    return ProblemDef(M, cost, grad, 0.0, L, rho, "distsq_hyperbolic", sampler=sampler,
                      info={"y_star": y_star, "region_radius": region_radius})


def karcher_spd(d=3, n_matrices=5, seed=0, spread=0.5, region_radius=None, matrices=None):
    M = SPD(d)
    rng = np.random.default_rng(seed)
    if matrices is None:
        matrices = [expm_sym(spread * sym(rng.standard_normal((d, d)))) for _ in range(n_matrices)]
    mats = []
    for A in matrices:
        A = np.asarray(A, dtype=float)
        if A.shape != (d, d) or np.max(np.abs(A - A.T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise ConfigError("karcher_spd matrices must be symmetric d x d")
        try:
            spd_eigh(A)
        except ValueError as err:
            raise ConfigError(f"karcher_spd matrix is not SPD: {err}") from None
        mats.append(sym(A))
    N = len(mats)

    def cost(P):
        return sum(M.dist(P, A) ** 2 for A in mats) / (2.0 * N)

    def grad(P):
        return -sum(M.log(P, A) for A in mats) / N

    def sampler(r):
        A = mats[r.integers(N)]
        return M.exp(A, random_tangent_in_ball(M, A, spread, r))

    L = rho = None
    if region_radius is not None:
        # curvature lies in [-1/2, 0]; the bound uses the constant -1/2 comparison
        L, rho = distsq_region_constants(region_radius, 0.5)
    return ProblemDef(M, cost, grad, 0.0, L, rho, "karcher_spd", sampler=sampler,
                      info={"matrices": mats, "region_radius": region_radius})


_BUILDERS = {
    "rayleigh_sphere": rayleigh_sphere,
    "quadratic_euclidean": quadratic_euclidean,
    "distsq_hyperbolic": distsq_hyperbolic,
    "karcher_spd": karcher_spd,
}


def build_problem(name, **params):
    """Build one of the named benchmark problems."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None
    try:
        return builder(**params)
    except TypeError as err:
        raise ConfigError(f"bad parameters for {name}: {err}") from None


def initial_point(prob, kind="random", rng=None):
    """Starting points: 'random', 'saddle' (Rayleigh only) or 'near_min'."""
    rng = np.random.default_rng(0) if rng is None else rng
    M = prob.manifold
    if kind == "random":
        return prob.sample_point(rng)
    if prob.name == "rayleigh_sphere":
        V = prob.info["eigvecs"]
        if kind == "saddle":
            return V[:, M.n // 2].copy()
        if kind == "near_min":
            x = V[:, 0]
            return M.exp(x, 0.1 * random_unit_tangent(M, x, rng))
    elif kind == "near_min":
        if prob.name == "quadratic_euclidean":
            return prob.info["y_star"] + 0.1 * rng.standard_normal(M.n)
        if prob.name == "distsq_hyperbolic":
            y = prob.info["y_star"]
            return M.exp(y, 0.1 * random_unit_tangent(M, y, rng))
        if prob.name == "karcher_spd":
            A = prob.info["matrices"][0]
            return M.exp(A, 0.1 * random_unit_tangent(M, A, rng))
    raise ConfigError(f"start {kind!r} is not available for {prob.name}")


SAFETY = 1.5


def estimate_lipschitz(prob, region_radius, trials, rng):
    """Sampled gradient and Hessian Lipschitz constants, inflated by 1.5.

    For sampled x and s with |s| <= region_radius::

        L   ~ |P_s^* grad f(Exp_x s) - grad f(x)| / |s|
        rho ~ |P_s^* grad f(Exp_x s) - grad f(x) - Hess f(x)[s]| / (|s|^2 / 2)

    with P_s^* the transport back to x and the Hessian by finite
    differences of the pullback gradient.
    """
    M = prob.manifold
    Lmax = rmax = 0.0
    for _ in range(trials):
        x = prob.sample_point(rng)
        u = random_unit_tangent(M, x, rng)
        t = region_radius * rng.uniform(0.05, 1.0)
        s = t * u
        gx = prob.riemannian_grad(x)
        gy = prob.riemannian_grad(M.exp(x, s))
        diff = M.transport_inverse(x, s, gy) - gx
        Lmax = max(Lmax, M.norm(x, diff) / t)
        Hs = t * hess_vec_at_origin(prob, x, u)
        rmax = max(rmax, M.norm(x, diff - Hs) / (0.5 * t * t))
    return SAFETY * Lmax, SAFETY * rmax

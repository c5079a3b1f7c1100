"""Manifold interface and tangent-space utilities.

Points and tangent vectors are plain numpy arrays in the ambient
embedding (unit vectors, hyperboloid vectors, symmetric matrices or
plain vectors).  A tangent vector is always paired with its base point
explicitly in every call, ``M.exp(x, s)``, ``M.inner(x, u, v)``...

All closed forms are written against the embedding so that finite
difference oracles are straightforward.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ManifoldError

# below this norm a tangent vector is treated as zero in direction-dependent
# formulas
TINY = 1e-14
# switch to series expansions of sin(t)/t and friends below this argument
SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class CurvatureProfile:
    """Sectional curvature bounds ``k_low <= K <= k_up``.

    ``k`` bounds the curvature magnitude and ``f_bound`` bounds the
    covariant derivative of the curvature endomorphism.
    """

    k_low: float
    k_up: float
    k: float
    f_bound: float = 0.0

    def __post_init__(self):
        if self.k_low > self.k_up:
            raise ValueError("k_low must not exceed k_up")
        if not np.isclose(self.k, max(abs(self.k_low), abs(self.k_up)), rtol=0, atol=1e-15):
            raise ValueError("k must equal max(|k_low|, |k_up|)")
        if self.f_bound < 0:
            raise ValueError("f_bound must be nonnegative")

    @classmethod
    def from_bounds(cls, k_low, k_up, f_bound=0.0):
        return cls(float(k_low), float(k_up), float(max(abs(k_low), abs(k_up))), float(f_bound))

    def as_tuple(self):
        return (self.k_low, self.k_up, self.k, self.f_bound)

    @property
    def injectivity_guard(self):
        """Radius below which Exp is injective (pi/sqrt(k_up) if k_up > 0)."""
        if self.k_up > 0:
            return np.pi / np.sqrt(self.k_up)
        return np.inf


def sinc_ratio(t):
    """sin(t)/t with a series near 0."""
    if abs(t) < SERIES_CUTOFF:
        t2 = t * t
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0
    return np.sin(t) / t


def sinhc_ratio(t):
    """sinh(t)/t with a series near 0."""
    if abs(t) < SERIES_CUTOFF:
        t2 = t * t
        return 1.0 + t2 / 6.0 + t2 * t2 / 120.0
    return np.sinh(t) / t


class Manifold:
    """Abstract Riemannian manifold with an exponential map.

    Subclasses implement the embedding-level closed forms.  Handles are
    immutable after construction.
    """

    name = "manifold"
    dim = 0
    curvature = CurvatureProfile(0.0, 0.0, 0.0, 0.0)
    point_tol = 1e-12

    # -- metric ---------------------------------------------------------
    def inner(self, x, u, v):
        raise NotImplementedError

    def norm(self, x, u):
        return float(np.sqrt(max(self.inner(x, u, u), 0.0)))

    def proj(self, x, u):
        """Orthogonal projection of an ambient vector onto T_x M."""
        raise NotImplementedError

    # -- maps -----------------------------------------------------------
    def exp(self, x, s):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def dexp(self, x, s, sdot):
        """Differential of Exp_x at s applied to sdot (a vector at exp(x, s))."""
        raise NotImplementedError

    def dexp_adjoint(self, x, s, w):
        """Adjoint of dexp(x, s, .) applied to w in the tangent space at exp(x, s)."""
        raise NotImplementedError

    def transport(self, x, s, v):
        """Parallel transport of v from x to exp(x, s) along the geodesic."""
        raise NotImplementedError

    def transport_inverse(self, x, s, w):
        """Inverse of transport(x, s, .): carries w from exp(x, s) back to x."""
        y = self.exp(x, s)
        return self.transport(y, -self.transport(x, s, s), w)

    def dist(self, x, y):
        raise NotImplementedError

    # -- points and frames ----------------------------------------------
    def project_point(self, x):
        """Re-project a nearly feasible point onto the manifold."""
        return x

    def random_point(self, rng):
        raise NotImplementedError

    def zero(self, x):
        return np.zeros_like(x)

    def basis(self, x):
        """Orthonormal basis of T_x M as an array of shape (dim, *x.shape)."""
        raise NotImplementedError

    def frame_coords(self, x, basis, u):
        """Coordinates of u in an orthonormal basis of T_x M."""
        return np.array([self.inner(x, e, u) for e in basis])

    def from_frame(self, basis, c):
        return np.tensordot(np.asarray(c, dtype=float), basis, axes=1)

    def is_point(self, x, tol=None):
        try:
            self.check_point(x, tol)
        except ManifoldError:
            return False
        return True

    def check_point(self, x, tol=None):
        raise NotImplementedError

    def check_tangent(self, x, u, tol=None):
        raise NotImplementedError

    def curvature_bounds(self):
        return self.curvature.as_tuple()

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


def _validated(M, x):
    x = np.asarray(x, dtype=float)
    M.check_point(x)
    return x


def orthonormal_tangent_basis(M, x):
    """Deterministic orthonormal basis e_1..e_d of T_x M."""
    x = _validated(M, x)
    return list(M.basis(x))


def random_tangent_in_ball(M, x, radius, rng):
    """Sample uniformly from the metric ball of the given radius in T_x M.

    The direction is an isotropic Gaussian in an orthonormal frame and the
    length is ``radius * u**(1/d)`` with u uniform on [0, 1].
    """
    if radius < 0:
        raise ValueError(f"radius must be nonnegative, got {radius}")
    x = _validated(M, x)
    basis = M.basis(x)
    d = basis.shape[0]
    g = rng.standard_normal(d)
    u = rng.uniform()
    if radius == 0:
        return M.zero(x)
    g /= np.linalg.norm(g)
    return M.from_frame(basis, radius * u ** (1.0 / d) * g)


def random_unit_tangent(M, x, rng):
    basis = M.basis(x)
    g = rng.standard_normal(basis.shape[0])
    return M.from_frame(basis, g / np.linalg.norm(g))


def split_tangent(M, x, s, sdot):
    """Split sdot into components parallel and orthogonal to s."""
    ns = M.norm(x, s)
    if ns < TINY:
        return M.zero(x), sdot
    par = (M.inner(x, s, sdot) / ns**2) * s
    return par, sdot - par

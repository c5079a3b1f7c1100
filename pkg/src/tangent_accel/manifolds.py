"""Closed-form manifolds: sphere, hyperboloid, SPD matrices, Euclidean space.

Each class provides exact Exp, Log, DExp and its adjoint, parallel
transport along geodesics, distance and a curvature profile.

Notes
-----
On the sphere and the hyperboloid (constant curvature) the differential
of the exponential map has the separated form::

    T_s[sdot] = P_s(sdot_par) + (h(|s|)/|s|) P_s(sdot_perp)

with h = sin on the sphere and h = sinh on the hyperboloid.

For SPD matrices with the affine-invariant metric
``<X, Y>_P = tr(P^-1 X P^-1 Y)`` we use the standard formulas::

    Exp_P(X) = P^1/2 expm(P^-1/2 X P^-1/2) P^1/2
    Gamma_{P -> Exp_P(X)}(V) = E V E^T,   E = P^1/2 expm(S/2) P^-1/2

with S = P^-1/2 X P^-1/2 and DExp obtained from the Frechet derivative
of expm in the eigenbasis of S.
"""
import numpy as np

from .exceptions import ManifoldError
from .geometry import (
    TINY,
    CurvatureProfile,
    Manifold,
    sinc_ratio,
    sinhc_ratio,
)


class _ConstantCurvature(Manifold):
    """Shared DExp logic for the sphere and the hyperboloid."""

    def _ratio(self, t):
        raise NotImplementedError

    def _unit_velocity_at_end(self, x, u, t):
        """Velocity at time t of the unit-speed geodesic from x along u."""
        raise NotImplementedError

    def dexp(self, x, s, sdot):
        t = self.norm(x, s)
        if t < TINY:
            return sdot.copy()
        u = s / t
        a = self.inner(x, u, sdot)
        perp = sdot - a * u
        return self.transport(x, s, a * u + self._ratio(t) * perp)

    def dexp_adjoint(self, x, s, w):
        t = self.norm(x, s)
        if t < TINY:
            return w.copy()
        u = s / t
        ut = self._unit_velocity_at_end(x, u, t)
        a = self.inner(x, ut, w)
        # w - a*ut is orthogonal to the plane of the geodesic, so transport
        # leaves it unchanged
        return a * u + self._ratio(t) * (w - a * ut)

    def transport_inverse(self, x, s, w):
        t = self.norm(x, s)
        if t < TINY:
            return w.copy()
        u = s / t
        ut = self._unit_velocity_at_end(x, u, t)
        return w + self.inner(x, ut, w) * (u - ut)


class Sphere(_ConstantCurvature):
    """Unit sphere S^{n-1} embedded in R^n."""

    def __init__(self, n):
        if int(n) != n or n < 3:
            raise ValueError(f"sphere needs ambient dimension n >= 3, got {n}")
        self.n = int(n)
        self.dim = self.n - 1
        self.name = f"sphere({self.n})"
        self.curvature = CurvatureProfile(1.0, 1.0, 1.0, 0.0)

    def inner(self, x, u, v):
        return float(np.dot(u, v))

    def norm(self, x, u):
        return float(np.linalg.norm(u))

    def proj(self, x, u):
        return u - np.dot(x, u) * x

    def _ratio(self, t):
        return sinc_ratio(t)

    def _unit_velocity_at_end(self, x, u, t):
        return np.cos(t) * u - np.sin(t) * x

    def exp(self, x, s):
        t = np.linalg.norm(s)
        if t == 0.0:
            return x.copy()
        y = np.cos(t) * x + (np.sin(t) / t) * s
        return y / np.linalg.norm(y)

    def log(self, x, y):
        u = y - np.dot(x, y) * x
        nu = np.linalg.norm(u)
        d = self.dist(x, y)
        if nu < TINY:
            if d > 1.0:
                raise ManifoldError("log undefined for antipodal points")
            return u
        return (d / nu) * u

    def transport(self, x, s, v):
        t = np.linalg.norm(s)
        if t < TINY:
            return v.copy()
        u = s / t
        a = np.dot(u, v)
        return v + a * ((np.cos(t) - 1.0) * u - np.sin(t) * x)

    def dist(self, x, y):
        # atan2 form is accurate near 0 and pi, unlike arccos
        return float(np.arctan2(np.linalg.norm(y - np.dot(x, y) * x), np.dot(x, y)))

    def project_point(self, x):
        return x / np.linalg.norm(x)

    def random_point(self, rng):
        x = rng.standard_normal(self.n)
        return x / np.linalg.norm(x)

    def basis(self, x):
        # columns 2..n of the Householder reflection that maps e_1 to -sign(x_0) x
        w = x.astype(float).copy()
        sgn = 1.0 if x[0] >= 0 else -1.0
        w[0] += sgn
        H = np.eye(self.n) - 2.0 * np.outer(w, w) / np.dot(w, w)
        return H[1:].copy()

    def frame_coords(self, x, basis, u):
        return basis @ u

    def check_point(self, x, tol=None):
        tol = self.point_tol if tol is None else tol
        x = np.asarray(x)
        if x.shape != (self.n,) or not np.all(np.isfinite(x)):
            raise ManifoldError(f"expected a finite vector of length {self.n}")
        if abs(np.linalg.norm(x) - 1.0) > tol:
            raise ManifoldError(f"point is off the unit sphere: |x| - 1 = {np.linalg.norm(x) - 1.0:.3e}")

    def check_tangent(self, x, u, tol=None):
        tol = self.point_tol if tol is None else tol
        if np.shape(u) != (self.n,):
            raise ManifoldError("tangent has the wrong shape")
        r = abs(np.dot(x, u))
        if r > tol * max(1.0, np.linalg.norm(u)):
            raise ManifoldError(f"vector is not tangent: <x, u> = {r:.3e}")


def minkowski(u, v):
    return float(np.dot(u[1:], v[1:]) - u[0] * v[0])


class Hyperbolic(_ConstantCurvature):
    """Hyperboloid model of H^{n-1}: x_2^2 + ... + x_n^2 - x_1^2 = -1, x_1 > 0."""

    def __init__(self, n):
        if int(n) != n or n < 3:
            raise ValueError(f"hyperbolic space needs ambient dimension n >= 3, got {n}")
        self.n = int(n)
        self.dim = self.n - 1
        self.name = f"hyperbolic({self.n})"
        self.curvature = CurvatureProfile(-1.0, -1.0, 1.0, 0.0)

    def inner(self, x, u, v):
        return minkowski(u, v)

    def proj(self, x, u):
        return u + minkowski(x, u) * x

    def _ratio(self, t):
        return sinhc_ratio(t)

    def _unit_velocity_at_end(self, x, u, t):
        return np.sinh(t) * x + np.cosh(t) * u

    def exp(self, x, s):
        t = self.norm(x, s)
        if t == 0.0:
            return x.copy()
        y = np.cosh(t) * x + (np.sinh(t) / t) * s
        return self.project_point(y)

    def log(self, x, y):
        u = y + minkowski(x, y) * x
        nu = np.sqrt(max(minkowski(u, u), 0.0))
        if nu < TINY:
            return self.proj(x, u)
        return (np.arcsinh(nu) / nu) * u

    def transport(self, x, s, v):
        t = self.norm(x, s)
        if t < TINY:
            return v.copy()
        u = s / t
        a = minkowski(u, v)
        return v + a * ((np.cosh(t) - 1.0) * u + np.sinh(t) * x)

    def dist(self, x, y):
        # arcsinh of the tangential component avoids the cancellation of
        # arccosh(-<x, y>) near the diagonal
        u = y + minkowski(x, y) * x
        return float(np.arcsinh(np.sqrt(max(minkowski(u, u), 0.0))))

    def project_point(self, x):
        y = np.array(x, dtype=float)
        y[0] = np.sqrt(1.0 + np.dot(y[1:], y[1:]))
        return y

    def random_point(self, rng):
        o = np.zeros(self.n)
        o[0] = 1.0
        v = np.zeros(self.n)
        v[1:] = rng.standard_normal(self.dim) / np.sqrt(self.dim)
        return self.exp(o, v)

    def basis(self, x):
        # Lorentz boost taking (1, 0, ..., 0) to x; its last n-1 columns
        # are orthonormal in T_x
        x0, xv = x[0], x[1:]
        B = np.empty((self.dim, self.n))
        B[:, 0] = xv
        B[:, 1:] = np.eye(self.dim) + np.outer(xv, xv) / (1.0 + x0)
        return B

    def frame_coords(self, x, basis, u):
        Ju = u.copy()
        Ju[0] = -Ju[0]
        return basis @ Ju

    def check_point(self, x, tol=None):
        tol = self.point_tol if tol is None else tol
        x = np.asarray(x)
        if x.shape != (self.n,) or not np.all(np.isfinite(x)):
            raise ManifoldError(f"expected a finite vector of length {self.n}")
        if x[0] <= 0:
            raise ManifoldError("hyperboloid points need x_1 > 0")
        r = minkowski(x, x) + 1.0
        if abs(r) > tol * max(1.0, x[0] ** 2):
            raise ManifoldError(f"point is off the hyperboloid: <x, x> + 1 = {r:.3e}")

    def check_tangent(self, x, u, tol=None):
        tol = self.point_tol if tol is None else tol
        if np.shape(u) != (self.n,):
            raise ManifoldError("tangent has the wrong shape")
        r = abs(minkowski(x, u))
        if r > tol * max(1.0, np.linalg.norm(x) * np.linalg.norm(u)):
            raise ManifoldError(f"vector is not tangent: <x, u> = {r:.3e}")


class Euclidean(Manifold):
    """Flat R^n: Exp_x(s) = x + s and transports are identities."""

    def __init__(self, n):
        if int(n) != n or n < 1:
            raise ValueError(f"Euclidean space needs n >= 1, got {n}")
        self.n = int(n)
        self.dim = self.n
        self.name = f"euclidean({self.n})"
        self.curvature = CurvatureProfile(0.0, 0.0, 0.0, 0.0)

    def inner(self, x, u, v):
        return float(np.dot(u, v))

    def norm(self, x, u):
        return float(np.linalg.norm(u))

    def proj(self, x, u):
        return np.array(u, dtype=float)

    def exp(self, x, s):
        return x + s

    def log(self, x, y):
        return y - x

    def dexp(self, x, s, sdot):
        return sdot.copy()

    def dexp_adjoint(self, x, s, w):
        return w.copy()

    def transport(self, x, s, v):
        return v.copy()

    def transport_inverse(self, x, s, w):
        return w.copy()

    def dist(self, x, y):
        return float(np.linalg.norm(y - x))

    def random_point(self, rng):
        return rng.standard_normal(self.n)

    def basis(self, x):
        return np.eye(self.n)

    def frame_coords(self, x, basis, u):
        return basis @ u

    def check_point(self, x, tol=None):
        x = np.asarray(x)
        if x.shape != (self.n,) or not np.all(np.isfinite(x)):
            raise ManifoldError(f"expected a finite vector of length {self.n}")

    def check_tangent(self, x, u, tol=None):
        if np.shape(u) != (self.n,):
            raise ManifoldError("tangent has the wrong shape")


# -- symmetric matrix functions -----------------------------------------

EIG_FLOOR = 1e-13


def sym(A):
    return 0.5 * (A + A.T)


def spd_eigh(P):
    """Eigendecomposition of an SPD matrix, refusing near-singular input."""
    w, V = np.linalg.eigh(sym(P))
    if w[0] < EIG_FLOOR:
        raise ManifoldError(f"matrix is not positive definite (smallest eigenvalue {w[0]:.3e})")
    return w, V


def sym_fun(w, V, fn):
    return (V * fn(w)) @ V.T


def sqrtm_pair(P):
    """Return (P^1/2, P^-1/2)."""
    w, V = spd_eigh(P)
    r = np.sqrt(w)
    return (V * r) @ V.T, (V / r) @ V.T


def expm_sym(S):
    w, V = np.linalg.eigh(sym(S))
    return sym_fun(w, V, np.exp)


def logm_spd(P):
    w, V = spd_eigh(P)
    return sym_fun(w, V, np.log)


def expm_divided_differences(w):
    """Matrix of first divided differences of exp at the eigenvalues w.

    G_ij = (e^wi - e^wj)/(wi - wj), evaluated stably as
    e^wj * expm1(wi - wj)/(wi - wj), and e^wi on the diagonal.
    """
    d = w[:, None] - w[None, :]
    ew = np.exp(w)
    G = np.empty_like(d)
    small = np.abs(d) < 1e-10
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(small, 0.0, ew[None, :] * np.expm1(d) / np.where(small, 1.0, d))
    # second order Taylor for nearly equal eigenvalues
    mid = ew[None, :] * (1.0 + d / 2.0)
    return np.where(small, mid, G)


def expm_frechet_sym(S, H):
    """Frechet derivative of expm at symmetric S in direction H."""
    w, V = np.linalg.eigh(sym(S))
    G = expm_divided_differences(w)
    return V @ (G * (V.T @ H @ V)) @ V.T


class SPD(Manifold):
    """Symmetric positive definite d x d matrices, affine-invariant metric."""

    def __init__(self, d):
        if int(d) != d or d < 2:
            raise ValueError(f"SPD manifold needs d >= 2, got {d}")
        self.d = int(d)
        self.dim = self.d * (self.d + 1) // 2
        self.name = f"spd({self.d})"
        self.curvature = CurvatureProfile(-0.5, 0.0, 0.5, 0.0)

    def inner(self, P, X, Y):
        Pinv = np.linalg.inv(P)
        return float(np.sum((Pinv @ X) * (Pinv @ Y).T))

    def proj(self, P, U):
        return sym(U)

    def _whiten(self, P, X):
        Ph, Pih = sqrtm_pair(P)
        return Ph, Pih, sym(Pih @ X @ Pih)

    def exp(self, P, X):
        Ph, Pih, S = self._whiten(P, X)
        return sym(Ph @ expm_sym(S) @ Ph)

    def log(self, P, Q):
        Ph, Pih = sqrtm_pair(P)
        return sym(Ph @ logm_spd(sym(Pih @ Q @ Pih)) @ Ph)

    def _transport_matrix(self, P, X, sign=1.0):
        Ph, Pih, S = self._whiten(P, X)
        return Ph @ expm_sym(sign * S / 2.0) @ Pih

    def transport(self, P, X, V):
        E = self._transport_matrix(P, X)
        return sym(E @ V @ E.T)

    def transport_inverse(self, P, X, W):
        Einv = self._transport_matrix(P, X, sign=-1.0)
        return sym(Einv @ W @ Einv.T)

    def dexp(self, P, X, Xdot):
        Ph, Pih, S = self._whiten(P, X)
        H = sym(Pih @ Xdot @ Pih)
        return sym(Ph @ expm_frechet_sym(S, H) @ Ph)

    def dexp_adjoint(self, P, X, W):
        # with Q = Exp_P(X) and S whitened, <T[Xd], W>_Q reduces to
        # tr(Dexpm(S)[H] * e^-S Wt e^-S) for Wt = P^-1/2 W P^-1/2, and the
        # Frechet derivative of expm is self-adjoint for symmetric S
        Ph, Pih, S = self._whiten(P, X)
        Em = expm_sym(-S)
        Wt = Em @ sym(Pih @ W @ Pih) @ Em
        return sym(Ph @ expm_frechet_sym(S, sym(Wt)) @ Ph)

    def dist(self, P, Q):
        Ph, Pih = sqrtm_pair(P)
        w, _ = spd_eigh(sym(Pih @ Q @ Pih))
        return float(np.sqrt(np.sum(np.log(w) ** 2)))

    def project_point(self, P):
        return sym(P)

    def random_point(self, rng):
        A = rng.standard_normal((self.d, self.d))
        return expm_sym(sym(A) / np.sqrt(self.d))

    def basis(self, P):
        Ph, _ = sqrtm_pair(P)
        out = []
        for i in range(self.d):
            for j in range(i, self.d):
                E = np.zeros((self.d, self.d))
                if i == j:
                    E[i, i] = 1.0
                else:
                    E[i, j] = E[j, i] = 1.0 / np.sqrt(2.0)
                out.append(Ph @ E @ Ph)
        return np.array(out)

    def frame_coords(self, P, basis, U):
        Pinv = np.linalg.inv(P)
        G = Pinv @ U @ Pinv
        return np.einsum("kij,ij->k", basis, G)

    def check_point(self, P, tol=None):
        tol = self.point_tol if tol is None else tol
        P = np.asarray(P)
        if P.shape != (self.d, self.d) or not np.all(np.isfinite(P)):
            raise ManifoldError(f"expected a finite {self.d}x{self.d} matrix")
        if np.max(np.abs(P - P.T)) > tol * max(1.0, np.max(np.abs(P))):
            raise ManifoldError("matrix is not symmetric")
        spd_eigh(P)

    def check_tangent(self, P, U, tol=None):
        tol = self.point_tol if tol is None else tol
        if np.shape(U) != (self.d, self.d):
            raise ManifoldError("tangent has the wrong shape")
        if np.max(np.abs(U - U.T)) > tol * max(1.0, np.max(np.abs(U))):
            raise ManifoldError("tangent matrix is not symmetric")


def make_sphere(n):
    return Sphere(n)


def make_hyperbolic(n):
    return Hyperbolic(n)


def make_spd(d):
    return SPD(d)


def make_euclidean(n):
    return Euclidean(n)


def _commutator(A, B):
    return A @ B - B @ A


def spd_curvature_tensor(P, W, X, Y, Z):
    """<R(W, X)Y, Z>_P = -1/4 tr([P^-1 W, P^-1 X][P^-1 Y, P^-1 Z])."""
    Pinv = np.linalg.inv(P)
    a = _commutator(Pinv @ W, Pinv @ X)
    b = _commutator(Pinv @ Y, Pinv @ Z)
    return -0.25 * float(np.trace(a @ b))


def spd_sectional_curvature(P, X, Y, M=None):
    """Sectional curvature of the plane spanned by X and Y at P."""
    M = SPD(P.shape[0]) if M is None else M
    xx, yy, xy = M.inner(P, X, X), M.inner(P, Y, Y), M.inner(P, X, Y)
    gram = xx * yy - xy**2
    if gram < 1e-12 * max(1.0, xx * yy):
        raise ValueError(f"X and Y are (nearly) parallel: Gram determinant {gram:.3e}")
    return spd_curvature_tensor(P, X, Y, Y, X) / gram

"""Numerical checks of the geometric bounds behind the algorithms.

Every check samples random configurations, compares an observed
quantity with its bound and returns a :class:`BoundReport`.  Where a
bound is attained on constant-curvature spaces, the equality is checked
too (to 1e-8 unless finite differences are involved).
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .accel.params import ball_radius
from .geometry import TINY, SERIES_CUTOFF, random_tangent_in_ball, random_unit_tangent, split_tangent
from .manifolds import SPD, Euclidean, Hyperbolic, Sphere, spd_sectional_curvature, sym
from .pullback import ProblemDef, pullback_grad

SLACK = 1e-8
EQ_TOL = 1e-8


@dataclass
class BoundReport:
    check_name: str
    trials: int = 0
    max_ratio: float = 0.0
    violations: int = 0
    witness: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.violations == 0 and self.max_ratio <= 1.0 + SLACK

    def observe(self, observed, bound, failed=False, atol=0.0, **witness):
        """Record one trial.

        ``atol`` is a rounding floor: only the part of ``observed`` above
        it is compared with the bound.
        """
        self.trials += 1
        excess = max(observed - atol, 0.0)
        if bound > 0:
            ratio = excess / bound
        else:
            ratio = 0.0 if excess == 0.0 else math.inf
        bad = failed or ratio > 1.0 + SLACK
        record = (bad and not self.violations) or (not self.violations and ratio > self.max_ratio)
        if record:
            self.witness = {k: _jsonable(v) for k, v in witness.items()}
            self.witness.update(observed=float(observed), bound=float(bound))
        self.max_ratio = max(self.max_ratio, ratio)
        if bad:
            self.violations += 1

    def track(self, key, value, how=max):
        old = self.extra.get(key)
        self.extra[key] = float(value) if old is None else float(how(old, value))

    def as_dict(self):
        return {"check_name": self.check_name, "trials": self.trials,
                "max_ratio": self.max_ratio, "violations": self.violations,
                "passed": self.passed, "witness": self.witness, "extra": self.extra}


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def comparison_fns(k_low, t):
    """The comparison functions (h, g, f) for curvature k_low at t >= 0.

    h solves h'' + k h = 0 with h(0) = 0, h'(0) = 1; g is its integral
    and f = g integrated once more and divided by t.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if k_low > 0 and t > math.pi / math.sqrt(k_low) * (1 + 1e-15):
        raise ValueError(f"t = {t} exceeds pi/sqrt(k_low) = {math.pi / math.sqrt(k_low)}")
    k = float(k_low)
    a = t * math.sqrt(abs(k))
    if a < SERIES_CUTOFF:
        t2 = t * t
        h = t - k * t * t2 / 6 + k * k * t2 * t2 * t / 120
        g = t2 / 2 - k * t2 * t2 / 24 + k * k * t2**3 / 720
        f = t2 / 6 - k * t2 * t2 / 120 + k * k * t2**3 / 5040
        return h, g, f
    r = 1.0 / math.sqrt(abs(k))
    if k > 0:
        return r * math.sin(a), r * r * (1 - math.cos(a)), r * r * (1 - math.sin(a) / a)
    return r * math.sinh(a), r * r * (math.cosh(a) - 1), r * r * (math.sinh(a) / a - 1)


def _constant_curvature(M):
    return isinstance(M, (Sphere, Hyperbolic))


def _default_cap(M):
    if isinstance(M, Hyperbolic):
        return 3.0
    K = M.curvature.k
    return math.pi / math.sqrt(K) if K > 0 else 1.0


def _sample_sdot(M, x, s, rng, parallel_prob=0.1):
    if rng.uniform() < parallel_prob:
        return (rng.uniform(0.5, 2.0) / M.norm(x, s)) * s
    return rng.uniform(0.5, 2.0) * random_unit_tangent(M, x, rng)


def check_dexp_transport(M, trials, radius_cap=None, rng=None):
    """|(T_s - P_s) sdot| <= K |s|^2 |sdot_perp| / 3, with equality case on constant curvature."""
    rng = np.random.default_rng(0) if rng is None else rng
    cap = _default_cap(M) if radius_cap is None else radius_cap
    K, k_low = M.curvature.k, M.curvature.k_low
    if K > 0 and cap > math.pi / math.sqrt(K) * (1 + 1e-12):
        raise ValueError("radius_cap must not exceed pi/sqrt(K)")
    rep = BoundReport(f"dexp_transport[{M.name}]")
    rep.extra["max_equality_error"] = 0.0
    for _ in range(trials):
        x = M.random_point(rng)
        t = cap * (1.0 - rng.uniform())
        s = t * random_unit_tangent(M, x, rng)
        sd = _sample_sdot(M, x, s, rng)
        y = M.exp(x, s)
        diff = M.dexp(x, s, sd) - M.transport(x, s, sd)
        obs = M.norm(y, diff)
        _, perp = split_tangent(M, x, s, sd)
        npp = M.norm(x, perp)
        bound = K * t * t * npp / 3.0
        failed = False
        if _constant_curvature(M):
            expected = K * comparison_fns(k_low, t)[2] * npp
            err = abs(obs - expected)
            rep.track("max_equality_error", err)
            failed = err > EQ_TOL * max(1.0, M.norm(x, sd))
        rep.observe(obs, bound, failed, atol=1e-12 * M.norm(x, sd), t=t, perp_norm=npp)
    return rep


def dexp_matrix(M, x, s):
    """Matrix of dexp(x, s, .) between orthonormal frames at x and Exp_x(s)."""
    Bx = M.basis(x)
    y = M.exp(x, s)
    By = M.basis(y)
    return np.column_stack([M.frame_coords(y, By, M.dexp(x, s, e)) for e in Bx])


def check_singular_values(M, trials, rng=None):
    """Singular values of T_s lie in [2/3, 4/3] for |s| <= 1/sqrt(K)."""
    rng = np.random.default_rng(0) if rng is None else rng
    K = M.curvature.k
    cap = 1.0 / math.sqrt(K) if K > 0 else 1.0
    rep = BoundReport(f"singular_values[{M.name}]")
    rep.extra["max_equality_error"] = 0.0
    for i in range(trials):
        x = M.random_point(rng)
        t = 0.0 if i == 0 else cap * (1.0 - rng.uniform())
        s = t * random_unit_tangent(M, x, rng)
        sv = np.linalg.svd(dexp_matrix(M, x, s), compute_uv=False)
        smin, smax = float(sv.min()), float(sv.max())
        failed = False
        if _constant_curvature(M) and M.dim > 1:
            ratio = M._ratio(t)
            expected = sorted([1.0, ratio])
            err = max(abs(smin - expected[0]), abs(smax - expected[1]))
            rep.track("max_equality_error", err)
            failed = err > EQ_TOL
        rep.track("min_sigma", smin, min)
        rep.track("max_sigma", smax, max)
        rep.observe(max(smax / (4.0 / 3.0), (2.0 / 3.0) / smin), 1.0, failed,
                    t=t, sigma_min=smin, sigma_max=smax)
    return rep


def acceleration_closed_form(M, x, s, sdot):
    """c''(0) for c(t) = Exp_x(s + t sdot) on the sphere or the hyperboloid."""
    t = M.norm(x, s)
    if t < TINY:
        return M.zero(x)
    par, perp = split_tangent(M, x, s, sdot)
    Ps = M.transport(x, s, s)
    sv = M.inner(x, s, sdot)
    pp = M.inner(x, perp, perp)
    t2 = t * t
    if isinstance(M, Sphere):
        if t < 1e-3:
            a, b = 2 / 3 - 2 * t2 / 15, 1 / 3 - t2 / 30
        else:
            a = (t - math.sin(t) * math.cos(t)) / t**3
            b = (math.sin(t) - t * math.cos(t)) / t**3
        return a * pp * Ps - 2 * b * sv * perp
    if isinstance(M, Hyperbolic):
        if t < 1e-3:
            a, b = 2 / 3 + 2 * t2 / 15, 1 / 3 + t2 / 30
        else:
            a = (math.sinh(t) * math.cosh(t) - t) / t**3
            b = (t * math.cosh(t) - math.sinh(t)) / t**3
        return -a * pp * Ps + 2 * b * sv * perp
    if isinstance(M, Euclidean):
        return M.zero(x)
    raise TypeError(f"no closed form for {M.name}")


def acceleration_fd(M, x, s, sdot, h=1e-4):
    """D_t c'(0) by central differences of velocities transported back to c(0)."""
    y = M.exp(x, s)
    out = []
    for sign in (1.0, -1.0):
        z = M.exp(x, s + sign * h * sdot)
        vel = M.dexp(x, s + sign * h * sdot, sdot)
        out.append(M.transport(z, M.log(z, y), vel))
    return (out[0] - out[1]) / (2.0 * h)


def check_initial_acceleration(M, trials, rng=None, h=1e-4):
    """Closed form versus finite differences, the 3/2 bound and the sharp 2/3 constant."""
    rng = np.random.default_rng(0) if rng is None else rng
    K, F = M.curvature.k, M.curvature.f_bound
    cap = 1.0 / (4 * math.sqrt(K)) if K > 0 else 1.0
    if F > 0:
        cap = min(cap, K / (4 * F))
    rep = BoundReport(f"initial_acceleration[{M.name}]")
    rep.extra.update(max_fd_rel_error=0.0, max_sharp_deviation=0.0)
    has_cf = isinstance(M, (Sphere, Hyperbolic, Euclidean))
    for _ in range(trials):
        x = M.random_point(rng)
        t = cap * (1.0 - rng.uniform())
        s = t * random_unit_tangent(M, x, rng)
        sd = _sample_sdot(M, x, s, rng)
        y = M.exp(x, s)
        fd = acceleration_fd(M, x, s, sd, h)
        acc = fd
        failed = False
        _, perp = split_tangent(M, x, s, sd)
        nsd, npp = M.norm(x, sd), M.norm(x, perp)
        if has_cf:
            cf = acceleration_closed_form(M, x, s, sd)
            ncf = M.norm(y, cf)
            err = M.norm(y, cf - fd)
            rep.track("max_fd_rel_error", err / max(ncf, 1e-6 * nsd * nsd))
            failed |= err > 1e-4 * ncf + 1e-10 * nsd * nsd
            acc = cf
            if _constant_curvature(M) and npp > 1e-3 * nsd:
                sharp = ncf / ((2.0 / 3.0) * K * t * nsd * npp)
                rep.track("max_sharp_deviation", abs(sharp - 1.0) / (t * t))
                failed |= abs(sharp - 1.0) > t * t / 4 + 1e-8
                if isinstance(M, Sphere):
                    failed |= sharp > 1.0 + 1e-8
                else:
                    failed |= sharp < 1.0 - 1e-8
        floor = 1e-12 * nsd * nsd if has_cf else 1e-9 * nsd * nsd
        rep.observe(M.norm(y, acc), 1.5 * K * t * nsd * npp, failed, atol=floor, t=t)
    return rep


def _frame_hessian(prob, x, s, basis, h):
    M = prob.manifold
    cols = []
    for e in basis:
        gp = pullback_grad(prob, x, s + h * e)
        gm = pullback_grad(prob, x, s - h * e)
        cols.append(M.frame_coords(x, basis, (gp - gm) / (2 * h)))
    H = np.column_stack(cols)
    asym = np.linalg.norm(H - H.T) / max(np.linalg.norm(H), 1e-300)
    return 0.5 * (H + H.T), asym


def _base_point(prob, rng, gmax):
    """A sample point with |grad f| <= gmax, reached by gradient steps if needed."""
    M = prob.manifold
    x = prob.sample_point(rng)
    target = gmax * rng.uniform(0.05, 1.0)
    step = 1.0 / prob.lipschitz_L
    for _ in range(100000):
        g = prob.riemannian_grad(x)
        if M.norm(x, g) <= target:
            return x
        x = M.exp(x, -step * g)
    return x


def check_pullback_lipschitz(prob, trials, rng=None, pairs=6, h=1e-5, b=None):
    """Gradient and Hessian Lipschitz behaviour of pullbacks on B_x(b).

    Returns a dict of reports: ``gradient`` (ratio to 2L) and
    ``hessian`` (deviation from the Hessian at 0 relative to
    rho_hat |s|), plus ``sphere_gradient`` (5L/2) and
    ``sphere_hessian`` (rho + 3.1 L) over |s| <= pi on the sphere.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    M = prob.manifold
    L, rho = prob.lipschitz_L, prob.lipschitz_rho
    if L is None or rho is None:
        raise ValueError("check_pullback_lipschitz needs known constants")
    K = M.curvature.k
    rho_hat = rho + L * math.sqrt(K)
    if b is None:
        b = ball_radius(M.curvature, 1.0)
    reps = {"gradient": BoundReport(f"pullback_gradient_lipschitz[{prob.name}]"),
            "hessian": BoundReport(f"pullback_hessian_lipschitz[{prob.name}]")}
    sphere = isinstance(M, Sphere)
    if sphere:
        reps["sphere_gradient"] = BoundReport(f"sphere_global_gradient[{prob.name}]")
        reps["sphere_hessian"] = BoundReport(f"sphere_global_hessian[{prob.name}]")
    for r in reps.values():
        r.extra["max_asymmetry"] = 0.0
    for _ in range(trials):
        x = _base_point(prob, rng, L * b)
        basis = M.basis(x)
        for _ in range(pairs):
            u = random_tangent_in_ball(M, x, b, rng)
            if rng.uniform() < 0.5:
                v = random_tangent_in_ball(M, x, b, rng)
            else:
                v = u + 1e-3 * b * random_unit_tangent(M, x, rng)
                if M.norm(x, v) > b:
                    v = u - (v - u)
            dg = M.norm(x, pullback_grad(prob, x, u) - pullback_grad(prob, x, v))
            reps["gradient"].observe(dg / M.norm(x, u - v), 2 * L * (1 + 1e-6))
        H0, a0 = _frame_hessian(prob, x, M.zero(x), basis, h)
        t = b * rng.uniform(0.1, 1.0)
        s = t * random_unit_tangent(M, x, rng)
        Hs, a1 = _frame_hessian(prob, x, s, basis, h)
        dev = np.linalg.norm(Hs - H0, 2)
        reps["hessian"].track("max_asymmetry", max(a0, a1))
        reps["hessian"].observe(dev, rho_hat * t * (1 + 1e-3), t=t)
        if sphere:
            xg = prob.sample_point(rng)
            bg = M.basis(xg)
            H0g, _ = _frame_hessian(prob, xg, M.zero(xg), bg, h)
            tg = math.pi * (1.0 - rng.uniform())
            sg = tg * random_unit_tangent(M, xg, rng)
            Hg, ag = _frame_hessian(prob, xg, sg, bg, h)
            reps["sphere_gradient"].track("max_asymmetry", ag)
            reps["sphere_gradient"].observe(np.abs(np.linalg.eigvalsh(Hg)).max(),
                                            2.5 * L * (1 + 1e-6), t=tg)
            u = random_tangent_in_ball(M, xg, math.pi, rng)
            v = random_tangent_in_ball(M, xg, math.pi, rng)
            dg = M.norm(xg, pullback_grad(prob, xg, u) - pullback_grad(prob, xg, v))
            reps["sphere_gradient"].observe(dg / M.norm(xg, u - v), 2.5 * L * (1 + 1e-6))
            reps["sphere_hessian"].observe(np.linalg.norm(Hg - H0g, 2),
                                           (rho + 3.1 * L) * tg * (1 + 1e-3), t=tg)
    return reps


def hyperbolic_hessian_growth(ts=(0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0), n=5, rng=None, h=1e-6):
    """Pullback Hessians of a linear-type cost on the hyperboloid grow without bound.

    With f(x) = <a, x> (Minkowski), y a point with grad f(y) = w a unit
    tangent and Hess f(y) = <y, a> I = 0, take the geodesic gamma from y
    along w, x = gamma(t), s = -t gamma'(t) so Exp_x(s) = y, and a unit
    sdot at x orthogonal to s.  Then
    <sdot, Hess fhat_x(s) sdot> = (sinh t cosh t - t)/t^2 * |grad f(y)|,
    and the operator norm is at least that value.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    M = Hyperbolic(n)
    rep = BoundReport("hyperbolic_hessian_growth")
    rep.extra["max_identity_error"] = 0.0
    observed = []
    for t in ts:
        y = M.random_point(rng)
        w = random_unit_tangent(M, y, rng)
        a = w.copy()
        prob = ProblemDef(M, lambda z, a=a: -a[0] * z[0] + a[1:] @ z[1:],
                          lambda z, a=a: M.proj(z, a), -np.inf, name="linear")
        x = M.exp(y, t * w)
        s = -M.transport(y, t * w, t * w)
        sd = random_unit_tangent(M, x, rng)
        _, sd = split_tangent(M, x, s, sd)
        sd = sd / M.norm(x, sd)
        gp = pullback_grad(prob, x, s + h * sd)
        gm = pullback_grad(prob, x, s - h * sd)
        quad = M.inner(x, sd, (gp - gm) / (2 * h))
        gnorm = M.norm(y, prob.riemannian_grad(y))
        lower = t * (math.sinh(t) * math.cosh(t) - t) / t**3 * gnorm
        err = abs(quad - lower) / lower
        rep.track("max_identity_error", err)
        observed.append(abs(quad))
        # observed/bound <= 1 means the lower bound holds
        rep.observe(lower, abs(quad) * (1 + 1e-6), err > 1e-5, t=t)
    rep.extra["trend"] = [float(v) for v in observed]
    rep.extra["ts"] = [float(t) for t in ts]
    rep.extra["increasing"] = bool(np.all(np.diff(observed) > 0))
    if not rep.extra["increasing"]:
        rep.violations += 1
    return rep


def _jacobi(M, x, s, sd, t):
    return t * M.dexp(x, t * s, sd)


def _jacobi_dt_fd(M, x, s, sd, t, h=1e-5):
    out = []
    for sign in (1.0, -1.0):
        tau = t + sign * h
        z = M.exp(x, tau * s)
        vel = M.transport(x, tau * s, s)
        out.append(M.transport(z, -sign * h * vel, _jacobi(M, x, s, sd, tau)))
    return (out[0] - out[1]) / (2 * h)


def check_jacobi_bounds(M, trials, rng=None):
    """Bounds on J(t) = dexp(x, ts)[t sdot] and its covariant derivative, |s| = 1."""
    if not _constant_curvature(M):
        raise TypeError("Jacobi checks need the sphere or the hyperboloid")
    rng = np.random.default_rng(0) if rng is None else rng
    K, k_low = M.curvature.k, M.curvature.k_low
    tmax = math.pi - 1e-3 if isinstance(M, Sphere) else 3.0
    rep = BoundReport(f"jacobi[{M.name}]")
    rep.extra.update(max_equality_error=0.0, max_fd_error=0.0)
    for _ in range(trials):
        x = M.random_point(rng)
        s = random_unit_tangent(M, x, rng)
        sd = _sample_sdot(M, x, s, rng, parallel_prob=0.15)
        t = tmax * (1.0 - rng.uniform())
        hk, gk, _ = comparison_fns(k_low, t)
        dh = math.cos(t) if k_low > 0 else math.cosh(t)
        y = M.exp(x, t * s)
        vel = M.transport(x, t * s, s)
        J = _jacobi(M, x, s, sd, t)
        a = M.inner(x, sd, s)
        Jperp = J - t * a * vel
        perp = split_tangent(M, x, s, sd)[1]
        nsd, npp = M.norm(x, sd), M.norm(x, perp)
        # on constant curvature D_t J = a gamma' + h'(t) P(sdot_perp); the
        # finite-difference derivative cross-checks it
        DJ = a * vel + dh * M.transport(x, t * s, perp)
        fd_err = M.norm(y, DJ - _jacobi_dt_fd(M, x, s, sd, t)) / max(1.0, nsd)
        rep.track("max_fd_error", fd_err)
        DJperp = DJ - a * vel
        nJ, nJp = M.norm(y, J), M.norm(y, Jperp)
        nDJ, nDJp = M.norm(y, DJ), M.norm(y, DJperp)
        eq = abs(nJp - hk * npp)
        if npp < 1e-12:
            eq = max(eq, abs(nJ - t * abs(a)))
        rep.track("max_equality_error", eq)
        failed = eq > EQ_TOL * max(1.0, nsd) or fd_err > 1e-6
        ratios = [nJ / (max(t, hk) * nsd), nDJ / ((1 + K * gk) * nsd)]
        if npp > 1e-12:
            ratios += [nJp / (hk * npp), nDJp / ((1 + K * gk) * npp)]
        rep.observe(max(ratios), 1.0, failed, atol=1e-12, t=t)
    return rep


def tightness_pair(d=2):
    """The pair at P = I whose sectional curvature is -1/2."""
    X = np.zeros((d, d))
    X[0, 0], X[1, 1] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    Y = np.zeros((d, d))
    Y[0, 1] = Y[1, 0] = 1 / math.sqrt(2)
    return np.eye(d), X, Y


def _orthonormal_pair(M, P, rng):
    X = random_unit_tangent(M, P, rng)
    Y = random_unit_tangent(M, P, rng)
    Y = Y - M.inner(P, X, Y) * X
    return X, Y / M.norm(P, Y)


def check_spd_curvature(trials, dims=(2, 3, 5), rng=None):
    """Sectional curvatures of SPD matrices lie in [-1/2, 0]; the tight pair gives -1/2."""
    rng = np.random.default_rng(0) if rng is None else rng
    if not set(dims) <= set(range(2, 7)):
        raise ValueError("dims must be a subset of {2, ..., 6}")
    rep = BoundReport("spd_curvature")
    P, X, Y = tightness_pair(2)
    kt = spd_sectional_curvature(P, X, Y)
    rep.extra.update(tightness_value=kt, min_curvature=kt, max_curvature=kt)
    rep.trials += 1
    if abs(kt + 0.5) > 1e-12:
        rep.violations += 1
        rep.witness = {"case": "tightness", "curvature": kt}
    per_dim = max(1, trials // len(dims))
    for d in dims:
        M = SPD(d)
        for _ in range(per_dim):
            P = M.random_point(rng)
            X, Y = _orthonormal_pair(M, P, rng)
            k = spd_sectional_curvature(P, X, Y, M)
            rep.track("min_curvature", k, min)
            rep.track("max_curvature", k, max)
            bad = k < -0.5 - 1e-10 or k > 1e-10
            rep.observe(max(-k / 0.5, 0.0), 1.0 + 1e-10, bad, d=d, curvature=k)
    return rep


def spd_homogeneity(samples=1000, d=3, rng=None):
    """Two-sample K-S statistic between curvatures sampled at I and at random P.

    At P the pair is drawn as P^1/2 Z P^1/2 with Z drawn exactly as at
    the identity, so the two samples share one law when the metric is
    congruence invariant.
    """
    from scipy.stats import ks_2samp

    rng = np.random.default_rng(0) if rng is None else rng
    M = SPD(d)
    I = np.eye(d)

    def draw(P, Ph):
        Z1 = sym(rng.standard_normal((d, d)))
        Z2 = sym(rng.standard_normal((d, d)))
        return spd_sectional_curvature(P, Ph @ Z1 @ Ph, Ph @ Z2 @ Ph, M)

    at_I = [draw(I, I) for _ in range(samples)]
    at_P = []
    for _ in range(samples):
        P = M.random_point(rng)
        w, V = np.linalg.eigh(P)
        at_P.append(draw(P, (V * np.sqrt(w)) @ V.T))
    return ks_2samp(at_I, at_P).statistic

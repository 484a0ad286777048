"""Scalar measure formulas for the Poisson process of lambda-geodesic hyperplanes.

Conventions: the signed distance s of a hyperplane is positive when the origin
is *not* on its convex side, and only that half (s > 0) of the invariant
measure is used. In ball coordinates r = tanh(s / 2).
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, DomainError
from .geometry import _rc_from_t, cap_measure, hit_threshold_array
from .numerics import (QuadratureResult, adaptive_integrate, bracketed_root, gamma_ratio,
                       gauss_legendre, log_gamma)

DEFAULT_REL_TOL = 1e-10
SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ModelParams:
    d: int
    lam: float
    gamma: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.d!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam!r}")
        if not self.gamma > 0.0:
            raise DomainError(f"intensity must be positive, got {self.gamma!r}")


def _check_dim(d):
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")


def gamma_crit(d):
    """Critical intensity sqrt(pi) (d-1)^2 Gamma((d-1)/2) / Gamma(d/2); the same for every lambda."""
    _check_dim(d)
    return SQRT_PI * (d - 1) ** 2 * gamma_ratio(0.5 * (d - 1), 0.5 * d)


def crofton_slope(d):
    """Gamma(d/2) / (2 sqrt(pi) Gamma((d+1)/2))."""
    _check_dim(d)
    return gamma_ratio(0.5 * d, 0.5 * (d + 1)) / (2.0 * SQRT_PI)


def gamma_star(d, gamma):
    if gamma < 0:
        raise DomainError(f"intensity must be nonnegative, got {gamma!r}")
    return gamma * crofton_slope(d)


def radial_intensity(p, r):
    """Intensity 2 gamma (1 + 2 lambda r + r^2)^(d-1) / (1 - r^2)^d of the radii process."""
    if not 0.0 < r < 1.0:
        raise DomainError(f"radial intensity is defined on (0, 1), got r={r!r}")
    return _radial_weight(p, r)


def _radial_weight(p, r):
    # also valid at r = 0 and on arrays
    return 2.0 * p.gamma * (1.0 + 2.0 * p.lam * r + r * r) ** (p.d - 1) / ((1.0 - r) * (1.0 + r)) ** p.d


def invariant_density_signed(d, lam, s):
    """(cosh s + lambda sinh s)^(d-1), density of the invariant measure in the signed distance."""
    base = math.cosh(s) + lam * math.sinh(s)
    if not base > 0.0:
        raise DomainError(f"cosh(s) + lambda sinh(s) must be positive, got s={s!r}")
    return base ** (d - 1)


def _s_density(p):
    lam, k = p.lam, p.d - 1

    def density(s):
        return p.gamma * (np.cosh(s) + lam * np.sinh(s)) ** k

    return density


def _cumulative_s(p, s_lo, s_hi, rel_tol):
    """gamma * integral of (cosh + lambda sinh)^(d-1) over [s_lo, s_hi]."""
    if s_hi <= s_lo:
        return 0.0
    return adaptive_integrate(_s_density(p), s_lo, s_hi, rel_tol=rel_tol, vectorized=True).value


def radial_cumulative(p, z, rel_tol=DEFAULT_REL_TOL):
    """F(z), the expected number of hyperplanes with Euclidean distance at most z.

    d = 2 uses the closed form 2 gamma z (1 + lambda z) / (1 - z^2). Otherwise
    the integral is evaluated adaptively after the substitution r = tanh(s/2),
    which turns f(r) dr into gamma (cosh s + lambda sinh s)^(d-1) ds.
    """
    if not 0.0 <= z < 1.0:
        raise DomainError(f"z must lie in [0, 1), got {z!r}")
    if z == 0.0:
        return 0.0
    if p.d == 2:
        return 2.0 * p.gamma * z * (1.0 + p.lam * z) / ((1.0 - z) * (1.0 + z))
    return _cumulative_s(p, 0.0, 2.0 * math.atanh(z), rel_tol)


def _quantile_d2(gamma, lam, y):
    # positive root of (2 gamma lam + y) z^2 + 2 gamma z - y = 0
    y = np.asarray(y, dtype=float)
    return y / (gamma + np.sqrt(gamma * gamma + y * (2.0 * gamma * lam + y)))


def _s_upper_guess(p, y):
    # F(s) ~ gamma (1+lam)^(d-1) e^{(d-1)s} / (2^(d-1) (d-1)) for large s
    k = p.d - 1
    scale = p.gamma * (1.0 + p.lam) ** k / (2.0 ** k * k)
    return max(1.0, math.log(max(y, 1.0) / scale + 1.0) / k + 1.0)


def radial_quantile(p, y, tol=DEFAULT_REL_TOL):
    """The z with F(z) = y; inverse of ``radial_cumulative``."""
    if not y >= 0.0:
        raise DomainError(f"y must be nonnegative, got {y!r}")
    if y == 0.0:
        return 0.0
    if p.d == 2:
        return float(_quantile_d2(p.gamma, p.lam, y))
    s = _solve_increment(p, 0.0, y, tol * y)
    return math.tanh(0.5 * s)


def _solve_increment(p, s_lo, target, abs_tol):
    """Find s >= s_lo with gamma * int_{s_lo}^{s} density = target."""
    density = _s_density(p)
    quad_tol = 1e-13

    def g(s):
        return _cumulative_s(p, s_lo, s, quad_tol) - target

    # bracket: local slope at s_lo gives a first guess, then expand
    step = max(target / float(density(s_lo)), 1e-12)
    hi = s_lo + min(step, _s_upper_guess(p, target))
    while g(hi) < 0.0:
        hi = s_lo + 2.0 * (hi - s_lo)
    return bracketed_root(g, s_lo, hi, tol=abs_tol)


def radial_quantiles_sorted(p, ys, tol=DEFAULT_REL_TOL, start=(0.0, 0.0)):
    """Quantiles of an increasing sequence of levels (the arrival times of the radii).

    For d >= 3 each level is reached from the previous one by integrating only
    the increment, so a batch costs one root solve per point over a short range.
    ``start`` is the (s, level) pair to continue from, as returned by
    ``radial_s_sorted``.
    """
    ys = np.asarray(ys, dtype=float)
    if p.d == 2:
        return _quantile_d2(p.gamma, p.lam, ys)
    return np.tanh(0.5 * radial_s_sorted(p, ys, tol, start))


def radial_s_sorted(p, ys, tol=DEFAULT_REL_TOL, start=(0.0, 0.0)):
    """Hyperbolic distances s = 2 artanh(z) of the quantiles of increasing levels ``ys``."""
    ys = np.asarray(ys, dtype=float)
    if p.d == 2:
        return 2.0 * np.arctanh(_quantile_d2(p.gamma, p.lam, ys))
    out = np.empty_like(ys)
    s_prev, f_prev = start
    for i, y in enumerate(ys):
        s_prev = _solve_increment(p, s_prev, y - f_prev, tol * y)
        f_prev = y
        out[i] = s_prev
    return out


def shadow_intensity(p, s):
    """Intensity g(s; lambda) of the cap heights phi(r_n) on (0, 1); nonincreasing in lambda."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"cap height must lie in (0, 1), got {s!r}")
    one_minus = (1.0 - s) * (1.0 + s)
    return p.gamma * s / (one_minus ** (0.5 * (p.d + 1)) * math.sqrt(s * s + p.lam ** 2 * one_minus))


def _crofton_integrand(p, t, rc):
    def integrand(r):
        thr = np.clip(hit_threshold_array(p.lam, r, t, rc), 0.0, 1.0)
        return cap_measure(p.d, thr) * _radial_weight(p, r)

    return integrand


def hitting_measure_quadrature(p, h, rel_tol=DEFAULT_REL_TOL):
    """Intensity-measure of hyperplanes hitting a geodesic segment of length h, by quadrature.

    Integrates cap_measure(threshold(r)) * f(r) over r in (0, tanh(h/2)). For
    lambda > 0 the range is split at r_c, where the threshold switches from the
    tangency form to the endpoint form; each piece is integrated on its own.
    """
    if h < 0.0:
        raise DomainError(f"segment length must be nonnegative, got {h!r}")
    t = math.tanh(0.5 * h)
    if t == 0.0:
        return 0.0
    if p.lam == 0.0:
        rc = 0.0
    else:
        rc = _rc_from_t(p.lam, t)
    integrand = _crofton_integrand(p, t, rc)

    total = 0.0
    if rc > 0.0:
        # threshold ~ 2 sqrt(lambda r) near 0: refine geometrically toward the origin
        pts = [rc * 2.0 ** -k for k in range(1, 41)]
        total += adaptive_integrate(integrand, 0.0, rc, rel_tol=rel_tol, points=pts,
                                    vectorized=True).value
    if rc < t:
        # cap area vanishes like a power of (t - r) at the far end
        width = t - rc
        pts = [t - width * 2.0 ** -k for k in range(1, 31)]
        total += adaptive_integrate(integrand, rc, t, rel_tol=rel_tol, points=pts,
                                    vectorized=True).value
    return total


def hitting_measure_closed(d, gamma, h):
    """gamma_star(d, gamma) * h; the same for all lambda in [0, 1]."""
    if h < 0.0:
        raise DomainError(f"segment length must be nonnegative, got {h!r}")
    return gamma_star(d, gamma) * h


def expected_volume_closed(p):
    """Mean hyperbolic volume of the visibility region; +inf at or below the critical intensity."""
    d = p.d
    if p.gamma <= gamma_crit(d):
        return math.inf
    gs = gamma_star(d, p.gamma)
    log_val = (0.5 * (d - 1) * math.log(math.pi) + log_gamma(0.5 * (d + 1))
               + log_gamma(0.5 * (gs - d + 1)) - log_gamma(0.5 * (gs + d + 1)))
    return math.exp(log_val)


def sinh_exp_integral(d, a):
    """Closed form of int_0^inf sinh^(d-1)(s) e^(-a s) ds for a > d - 1."""
    _check_dim(d)
    if not a > d - 1:
        raise DivergenceError(f"integral diverges unless a > d - 1 (d={d}, a={a!r})")
    log_val = (math.lgamma(d) - d * math.log(2.0)
               + log_gamma(0.5 * (a - d + 1)) - log_gamma(0.5 * (a + d + 1)))
    return math.exp(log_val)


def sinh_exp_integral_numeric(d, a, rel_tol=1e-12, tail_ratio=1e-18):
    """Numeric counterpart of ``sinh_exp_integral``.

    Integrates unit blocks [k, k+1] and stops once the integrand has fallen
    below ``tail_ratio`` times the running value; the cut point is recorded in
    the result's note.
    """
    _check_dim(d)
    if not a > d - 1:
        raise DivergenceError(f"integral diverges unless a > d - 1 (d={d}, a={a!r})")
    k = d - 1

    def f(s):
        # sinh^k(s) e^{-as} = ((1 - e^{-2s}) / 2)^k e^{-(a-k)s}, overflow-free
        return (-0.5 * np.expm1(-2.0 * s)) ** k * np.exp(-(a - k) * s)

    total, err, subdiv = 0.0, 0.0, 0
    lo = 0.0
    while True:
        res = adaptive_integrate(f, lo, lo + 1.0, rel_tol=rel_tol, vectorized=True)
        total += res.value
        err += res.abs_error_estimate
        subdiv += res.subdivisions
        lo += 1.0
        if float(f(np.array(lo))) < tail_ratio * total:
            break
    return QuadratureResult(total, err, subdiv, f"truncated at s={lo:g}")


def sinh_power_integral(n, s):
    """int_0^s sinh^n(x) dx for integer n >= 0 and s >= 0."""
    if s <= 0.0:
        return 0.0
    if n == 0:
        return s
    if n == 1:
        return 2.0 * math.sinh(0.5 * s) ** 2
    if s < 1.0:
        # the recursion cancels badly for small s; the integrand is entire here
        return gauss_legendre(lambda x: np.sinh(x) ** n, 0.0, s, 24)
    sh, ch = math.sinh(s), math.cosh(s)
    return sh ** (n - 1) * ch / n - (n - 1) / n * sinh_power_integral(n - 2, s)


def unit_sphere_area(d):
    """Surface area 2 pi^(d/2) / Gamma(d/2) of S^(d-1)."""
    _check_dim(d)
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


def ball_model_constants(d, lam):
    """(R_lambda, gamma_B_crit) for lambda > 1, where hyperplanes become spheres of radius R_lambda."""
    _check_dim(d)
    if not lam > 1.0:
        raise DomainError(f"ball-model constants need lambda > 1, got {lam!r}")
    radius = math.atanh(1.0 / lam)
    crit = (d - 1) * math.gamma(0.5 * (d + 1)) / (
        math.pi ** (0.5 * (d - 1)) * (lam * lam - 1.0) ** (0.5 * (d - 1)))
    return radius, crit


def phi_derivative(lam, r):
    """Closed-form derivative of the cap height in r (used by diagnostics)."""
    num = 2.0 * math.sqrt(r * (lam + r) * (1.0 + lam * r))
    den = 1.0 + 2.0 * lam * r + r * r
    dnum = (lam + 2.0 * r + 2.0 * lam * lam * r + 3.0 * lam * r * r) / math.sqrt(
        r * (lam + r) * (1.0 + lam * r))
    dden = 2.0 * lam + 2.0 * r
    return (dnum * den - num * dden) / (den * den)


__all__ = [
    "ModelParams", "gamma_crit", "crofton_slope", "gamma_star", "radial_intensity",
    "radial_cumulative", "radial_quantile", "radial_quantiles_sorted", "radial_s_sorted",
    "invariant_density_signed", "shadow_intensity", "hitting_measure_quadrature",
    "hitting_measure_closed", "expected_volume_closed", "sinh_exp_integral",
    "sinh_exp_integral_numeric", "sinh_power_integral", "unit_sphere_area",
    "ball_model_constants", "phi_derivative",
]

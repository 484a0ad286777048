"""Exact geometry of lambda-geodesic hyperplanes in the Poincare ball.

Points of the ball and unit directions are plain numpy vectors; the helpers
``as_ball_point`` and ``as_direction`` validate them. A lambda-geodesic
hyperplane H(r, u) is the part inside the ball of a Euclidean sphere of radius
R = (1 - r^2) / (2 (lambda + r)) centred at (r + R) u, which meets the unit
sphere at angle theta with cos(theta) = lambda. Here r is the Euclidean
distance from the origin to H and u points away from the convex side.

The flat case lambda = r = 0 (a totally geodesic hyperplane through the
origin) has no finite sphere; predicates handle it through their r = 0 branch.

Orientation: for lambda = 0 a hyperplane has no intrinsic convex side; ``u``
alone fixes the orientation, and every sampled hyperplane has the origin on
its non-convex side (signed distance s > 0 along u).
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateHyperplaneError, DomainError
from .numerics import regularized_beta

UNIT_TOL = 1e-12


def as_ball_point(y):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise DomainError("a ball point must be a 1-d coordinate vector")
    if not np.linalg.norm(y) < 1.0:
        raise DomainError(f"point {y!r} is not inside the open unit ball")
    return y


def as_direction(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 2:
        raise DomainError("a direction must be a 1-d vector of length >= 2")
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise DomainError(f"direction {u!r} is not a unit vector")
    return u


def unit(v):
    """Normalize a nonzero vector."""
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class LambdaHyperplane:
    lam: float
    r: float
    u: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam!r}")
        if not 0.0 <= self.r < 1.0:
            raise DomainError(f"r must lie in [0, 1), got {self.r!r}")
        object.__setattr__(self, "u", as_direction(self.u))

    @property
    def is_flat(self):
        return self.lam == 0.0 and self.r == 0.0

    @property
    def radius(self):
        return euclid_radius(self.lam, self.r)

    @property
    def center(self):
        return (self.r + self.radius) * self.u

    def shadow(self):
        return ShadowCap(self.u, cap_height_phi(self.lam, self.r))


@dataclass(frozen=True)
class ShadowCap:
    """Closed cap {x on the unit sphere : <x, u> >= height}."""
    u: np.ndarray
    height: float

    def __post_init__(self):
        object.__setattr__(self, "u", as_direction(self.u))
        if not 0.0 <= self.height <= 1.0:
            raise DomainError(f"cap height must lie in [0, 1], got {self.height!r}")

    def contains(self, x):
        return float(np.dot(x, self.u)) >= self.height

    @property
    def half_angle(self):
        return math.acos(self.height)


@dataclass(frozen=True)
class SegmentSpec:
    """Geodesic segment from the origin, hyperbolic length h, along ``direction``."""
    h: float
    direction: np.ndarray

    def __post_init__(self):
        if not self.h > 0.0:
            raise DomainError(f"segment length must be positive, got {self.h!r}")
        if not math.tanh(0.5 * self.h) < 1.0:
            raise DomainError(f"segment length {self.h!r} reaches the ideal boundary in float64")
        object.__setattr__(self, "direction", as_direction(self.direction))

    @property
    def t(self):
        return math.tanh(0.5 * self.h)


def _artanh2(x):
    # 2 artanh(x) = log1p(2x / (1 - x)), accurate near x = 1
    return math.log1p(2.0 * x / (1.0 - x))


def dist_origin(y):
    """Hyperbolic distance from the origin to y."""
    return _artanh2(float(np.linalg.norm(as_ball_point(y))))


def dist_pair(x, y):
    x = as_ball_point(x)
    y = as_ball_point(y)
    diff2 = float(np.dot(x - y, x - y))
    delta = 2.0 * diff2 / ((1.0 - float(np.dot(x, x))) * (1.0 - float(np.dot(y, y))))
    # arcosh(1 + delta) without cancellation for small delta
    return math.log1p(delta + math.sqrt(delta * (delta + 2.0)))


def euclid_radius(lam, r):
    if lam + r <= 0.0:
        raise DegenerateHyperplaneError(
            "lambda = r = 0 is a flat hyperplane through the origin; it has no sphere radius")
    return (1.0 - r * r) / (2.0 * (lam + r))


def cap_height_phi(lam, r):
    """Height of the boundary cap shadowed by H(r, u): 2 sqrt(r(l+r)(1+lr)) / (1+2lr+r^2)."""
    if r <= 0.0:
        return 0.0
    return 2.0 * math.sqrt(r * (lam + r) * (1.0 + lam * r)) / (1.0 + 2.0 * lam * r + r * r)


def cap_height_phi_array(lam, r):
    r = np.asarray(r, dtype=float)
    return 2.0 * np.sqrt(r * (lam + r) * (1.0 + lam * r)) / (1.0 + 2.0 * lam * r + r * r)


def cap_height_deficit_asymptotic(lam, eps):
    """Two-term expansion of 1 - phi(1 - eps) as eps -> 0."""
    c = 2.0 * (1.0 + lam) ** 2
    return eps * eps / c + eps ** 3 / c


def cap_measure(d, h):
    """Normalized surface measure of the closed cap {<x, u> >= h} on S^{d-1}.

    Accepts scalar or array heights in [0, 1]. Evaluated as
    0.5 * I_{1-h^2}((d-1)/2, 1/2), the closed form of the defining integral.
    """
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d!r}")
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0.0) or np.any(h_arr > 1.0) or np.any(np.isnan(h_arr)):
        raise DomainError("cap height must lie in [0, 1]")
    x = (1.0 - h_arr) * (1.0 + h_arr)
    out = 0.5 * regularized_beta(x, 0.5 * (d - 1), 0.5)
    return float(out) if np.ndim(h) == 0 else out


def _rc_from_t(lam, t):
    # positive root of r^2 + ((1 - t^2)/lam) r - t^2 = 0, cancellation-free form
    b = (1.0 - t) * (1.0 + t) / lam
    return 2.0 * t * t / (b + math.sqrt(b * b + 4.0 * t * t))


def critical_radius_rc(lam, h):
    """Radius separating the tangency case from the endpoint case of the segment hit test."""
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"r_c needs lambda in (0, 1], got {lam!r}")
    if not h > 0.0:
        raise DomainError(f"r_c needs h > 0, got {h!r}")
    return _rc_from_t(lam, math.tanh(0.5 * h))


def tangency_threshold(lam, r):
    """f1: smallest u1 for which the ray along e1 touches the sphere of H(r, u)."""
    return 2.0 * math.sqrt((r * r * lam + r) * (lam + r)) / (r * r + 2.0 * lam * r + 1.0)


def endpoint_threshold(lam, r, t):
    """f3: smallest u1 for which the near intersection lies within Euclidean distance t."""
    return (t * t * (lam + r) + r * r * lam + r) / (t * (r * r + 2.0 * lam * r + 1.0))


def hit_threshold(lam, r, t, rc=None):
    """Threshold on u1 = <u, e1> for H(r, u) to meet the segment [0, t e1].

    Returns -inf when every u hits (r = 0) and +inf when none can (r > t).
    Callers may pass a precomputed ``rc``.
    """
    if r == 0.0:
        return -math.inf
    if r > t:
        return math.inf
    if lam == 0.0:
        return endpoint_threshold(0.0, r, t)
    if rc is None:
        rc = _rc_from_t(lam, t)
    if r < rc:
        return tangency_threshold(lam, r)
    return endpoint_threshold(lam, r, t)


def hit_threshold_array(lam, r, t, rc=None):
    """Vectorized ``hit_threshold`` for radii in (0, t]."""
    r = np.asarray(r, dtype=float)
    f3 = (t * t * (lam + r) + r * r * lam + r) / (t * (r * r + 2.0 * lam * r + 1.0))
    if lam == 0.0:
        return f3
    if rc is None:
        rc = _rc_from_t(lam, t)
    f1 = 2.0 * np.sqrt((r * r * lam + r) * (lam + r)) / (r * r + 2.0 * lam * r + 1.0)
    return np.where(r < rc, f1, f3)


def hits_segment(H, seg):
    """Closed-form test whether H meets the geodesic segment ``seg`` (equality is a hit)."""
    u1 = float(np.dot(H.u, seg.direction))
    return u1 >= hit_threshold(H.lam, H.r, seg.t)


def hits_segment_bruteforce(H, seg, n_steps=64):
    """Independent hit test: solve |(r+R)u - x e|^2 = R^2 for x in [0, t] directly."""
    t = seg.t
    u1 = float(np.dot(H.u, seg.direction))
    if H.r == 0.0:
        if H.is_flat:
            # flat hyperplane {<x, u> = 0}: look for a sign change / zero along the segment
            xs = np.linspace(0.0, t, max(n_steps, 2))
            side = xs * u1
            return bool(np.any(side == 0.0) or np.any(np.sign(side[:-1]) != np.sign(side[1:])))
        # sphere through the origin
        return True
    lam, r = H.lam, H.r
    c = r + euclid_radius(lam, r)
    # p(x) = x^2 - 2 c u1 x + c^2 - R^2; stable roots, since R can be huge for tiny r
    prod = r * (1.0 + lam * r) / (lam + r)
    disc = (c * u1) ** 2 - prod
    if disc < 0.0:
        return False
    q = c * u1 + math.copysign(math.sqrt(disc), u1)
    roots = (q, prod / q) if q != 0.0 else (0.0,)
    return any(0.0 <= x <= t for x in roots)


def ray_first_hit(H, ray):
    """Hyperbolic distance along ``ray`` to its first meeting with H, or None."""
    u1 = float(np.dot(H.u, ray))
    if H.r == 0.0:
        return 0.0
    lam, r = H.lam, H.r
    R = euclid_radius(lam, r)
    c = r + R
    prod = r * (1.0 + lam * r) / (lam + r)  # c^2 - R^2, product of the roots
    if u1 <= 0.0:
        return None
    disc = (c * u1) ** 2 - prod
    if disc < 0.0:
        return None
    x = prod / (c * u1 + math.sqrt(disc))
    if not 0.0 <= x < 1.0:
        return None
    return _artanh2(x)


def first_hit_matrix(lam, radii, dirs, rays):
    """Hit distances for every (ray, hyperplane) pair; +inf where the ray misses.

    ``radii`` has shape (n,), ``dirs`` (n, d), ``rays`` (m, d); result (m, n).
    """
    radii = np.asarray(radii, dtype=float)
    u1 = np.asarray(rays, dtype=float) @ np.asarray(dirs, dtype=float).T
    out = np.full(u1.shape, np.inf)
    if radii.size == 0:
        return out
    zero = radii == 0.0
    r = np.where(zero, 0.5, radii)
    R = (1.0 - r * r) / (2.0 * (lam + r))
    c = r + R
    prod = r * (1.0 + lam * r) / (lam + r)
    cu = c * u1
    disc = cu * cu - prod
    ok = (u1 > 0.0) & (disc >= 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        x = prod / (cu + np.sqrt(np.where(ok, disc, 0.0)))
        ok &= x < 1.0
        s = np.log1p(2.0 * x / (1.0 - x))
    out[ok] = s[ok]
    if np.any(zero):
        out[:, zero] = 0.0
    return out

"""Numerical kernels: adaptive quadrature, bracketed root finding, log-gamma
and the regularized incomplete beta function used for cap areas.
"""
import heapq
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError

EPS = np.finfo(float).eps
MAX_SUBDIVISIONS = 10_000
MAX_ROOT_ITERATIONS = 200

# Gauss-Kronrod 7/15 pair (QUADPACK qk15), nodes on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
# full 15-point layout: -x0..-x6, 0, x6..x0
_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_KWEIGHTS = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[7] = _WG[3]
_GWEIGHTS[[13, 11, 9]] = _WG[:3]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    subdivisions: int
    note: str = ""


def _panel_nodes(a, b):
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return centre + half * _NODES, half


def _panel_estimate(fx, half):
    resk = float(np.dot(_KWEIGHTS, fx))
    resg = float(np.dot(_GWEIGHTS, fx))
    mean = 0.5 * resk
    resabs = float(np.dot(_KWEIGHTS, np.abs(fx))) * abs(half)
    resasc = float(np.dot(_KWEIGHTS, np.abs(fx - mean))) * abs(half)
    err = abs((resk - resg) * half)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    # roundoff floor keeps the estimate conservative for exactly-integrated panels
    err = max(err, 50.0 * EPS * resabs)
    return resk * half, err


def _evaluate(f, x, vectorized):
    if vectorized:
        fx = np.asarray(f(x), dtype=float)
        if fx.shape != x.shape:
            fx = np.broadcast_to(fx, x.shape).astype(float)
    else:
        fx = np.array([f(float(xi)) for xi in x], dtype=float)
    if not np.all(np.isfinite(fx)):
        raise DomainError("integrand is not finite at some quadrature node")
    return fx


def adaptive_integrate(f, a, b, rel_tol=1e-10, abs_tol=0.0, points=(),
                       vectorized=False, max_subdivisions=MAX_SUBDIVISIONS):
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over ``[a, b]``.

    The panel with the largest error estimate is bisected until the summed
    estimate drops below ``max(abs_tol, rel_tol * |value|)``. ``points`` are
    extra breakpoints that seed the initial panels; callers use them to keep
    panels from straddling kinks. With ``vectorized=True`` the integrand is
    called on arrays of nodes.

    Raises ConvergenceError (carrying the partial QuadratureResult) when more
    than ``max_subdivisions`` bisections would be needed.
    """
    if not a < b:
        raise DomainError(f"need a < b, got a={a!r}, b={b!r}")
    edges = sorted({float(a), float(b), *(float(p) for p in points if a < p < b)})

    heap = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, half = _panel_nodes(lo, hi)
        val, err = _panel_estimate(_evaluate(f, x, vectorized), half)
        heap.append((-err, lo, hi, val))
    heapq.heapify(heap)

    subdivisions = 0
    note = ""
    total = math.fsum(p[3] for p in heap)
    total_err = math.fsum(-p[0] for p in heap)
    while True:
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            # running sums drift; confirm with exact sums before stopping
            total = math.fsum(p[3] for p in heap)
            total_err = math.fsum(-p[0] for p in heap)
            if total_err <= max(abs_tol, rel_tol * abs(total)):
                break
        if subdivisions >= max_subdivisions:
            raise ConvergenceError(
                f"adaptive_integrate: {max_subdivisions} subdivisions exceeded on "
                f"[{a}, {b}] (value {total!r}, error estimate {total_err!r})",
                partial=QuadratureResult(total, total_err, subdivisions, "not converged"),
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # panel at machine resolution; nothing left to refine
            heapq.heappush(heap, (neg_err, lo, hi, val))
            note = "stopped at machine resolution"
            break
        x1, h1 = _panel_nodes(lo, mid)
        x2, h2 = _panel_nodes(mid, hi)
        fx = _evaluate(f, np.concatenate([x1, x2]), vectorized)
        v1, e1 = _panel_estimate(fx[:15], h1)
        v2, e2 = _panel_estimate(fx[15:], h2)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        subdivisions += 1

    total = math.fsum(p[3] for p in heap)
    total_err = math.fsum(-p[0] for p in heap)
    return QuadratureResult(total, total_err, subdivisions, note)


@lru_cache(maxsize=8)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(f, a, b, n=20):
    """Fixed n-point Gauss-Legendre rule on [a, b]; f must accept arrays."""
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    return half * float(np.dot(w, f(0.5 * (a + b) + half * x)))


def bracketed_root(g, lo, hi, tol=1e-10, max_iter=MAX_ROOT_ITERATIONS):
    """Root of a monotone function on a sign-changing bracket.

    Illinois-modified regula falsi, falling back to bisection whenever the
    bracket fails to halve over two steps. Returns x in [lo, hi] with
    |g(x)| <= tol, or the best point once the bracket is at machine width.
    """
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0.0:
        raise DomainError(
            f"bracketed_root: g({lo})={glo!r} and g({hi})={ghi!r} have the same sign")

    best_x, best_g = (lo, glo) if abs(glo) < abs(ghi) else (hi, ghi)
    side = 0
    width = hi - lo
    for it in range(max_iter):
        if abs(best_g) <= tol:
            return best_x
        if hi - lo <= 4.0 * EPS * max(abs(lo), abs(hi), 1e-300):
            return best_x
        x = hi - ghi * (hi - lo) / (ghi - glo)
        if it % 2 == 1:
            if hi - lo > 0.5 * width:
                x = 0.5 * (lo + hi)
            width = hi - lo
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        gx = g(x)
        if abs(gx) < abs(best_g):
            best_x, best_g = x, gx
        if gx == 0.0:
            return x
        if (gx < 0.0) == (glo < 0.0):
            lo, glo = x, gx
            if side == -1:
                ghi *= 0.5
            side = -1
        else:
            hi, ghi = x, gx
            if side == 1:
                glo *= 0.5
            side = 1
    return best_x


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def gamma_ratio(a, b):
    """Gamma(a) / Gamma(b), computed through log-gamma."""
    return math.exp(log_gamma(a) - log_gamma(b))


def regularized_beta(x, a, b):
    """Regularized incomplete beta I_x(a, b); vectorized over x."""
    return special.betainc(a, b, x)

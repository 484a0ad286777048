"""Visibility from the origin through a Poisson process of lambda-geodesic hyperplanes.

Two facts drive the implementation:

* A hyperplane at Euclidean distance r cannot meet a ray before hyperbolic
  distance 2 artanh(r). Since hyperplanes arrive in increasing r, a
  computation that only needs distances up to some bound can stop drawing
  hyperplanes once 2 artanh(r) passes that bound, and the result equals the
  one from the full radius-truncated sample.
* In d = 2 the shadows are arcs, so whether they cover the circle is decided
  exactly by an interval union. In d >= 3 only Monte-Carlo evidence is given.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, UnsupportedDimensionError
from .geometry import cap_height_phi_array, first_hit_matrix
from .measures import gamma_crit, sinh_power_integral, unit_sphere_area
from .sampler import SimConfig, hyperplane_blocks, make_rng, sample_process, trial_seed

TWO_PI = 2.0 * math.pi
ARC_TOL = 1e-12
Z99 = 2.5758293035489004


@dataclass(frozen=True)
class VisibilityProfile:
    directions: np.ndarray
    distances: np.ndarray
    censored: np.ndarray
    s_cutoff: float


COVERED = "covered"
NOT_COVERED_YET = "not_covered_yet"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class CoverageVerdict:
    status: str
    caps_used: int
    uncovered_measure_estimate: float


class CoveringEstimate(NamedTuple):
    fraction_covered: float
    ci_halfwidth: float


class VolumeEstimate(NamedTuple):
    estimate: float
    std_error: float
    censored_fraction: float


def equiangular_rays(n):
    theta = TWO_PI * np.arange(n) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


def random_rays(d, n, rng):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _artanh2(r):
    return np.log1p(2.0 * r / (1.0 - r))


def visibility_profile(sample, rays):
    """Visible distance along each ray, clamped at the sample's cutoff."""
    rays = np.atleast_2d(np.asarray(rays, dtype=float))
    S = sample.config.s_cutoff
    nearest = np.full(len(rays), np.inf)
    for lo in range(0, len(sample), 4096):
        hits = first_hit_matrix(sample.config.lam, sample.radii[lo:lo + 4096],
                                sample.directions[lo:lo + 4096], rays)
        nearest = np.minimum(nearest, hits.min(axis=1))
    censored = ~(nearest < S)
    return VisibilityProfile(rays, np.where(censored, S, nearest), censored, S)


def visible_distance(sample, ray):
    """(distance, censored) along one ray; censored means nothing is hit before the cutoff."""
    prof = visibility_profile(sample, np.asarray(ray, dtype=float)[None, :])
    return float(prof.distances[0]), bool(prof.censored[0])


def _stream_visible(config, rng, rays):
    """Visible distances for ``rays`` drawing only the hyperplanes that can matter."""
    S, r_max, lam = config.s_cutoff, config.r_max, config.lam
    nearest = np.full(len(rays), np.inf)
    count = 0
    for r_blk, u_blk in hyperplane_blocks(config, rng):
        keep = min(int(np.searchsorted(r_blk, r_max, side="right")), config.n_max - count)
        bound = min(S, float(nearest.max()))
        s_near = _artanh2(r_blk[:keep])
        n_use = int(np.searchsorted(s_near, bound, side="left"))
        if n_use:
            active = nearest > s_near[0]
            hits = first_hit_matrix(lam, r_blk[:n_use], u_blk[:n_use], rays[active])
            nearest[active] = np.minimum(nearest[active], hits.min(axis=1))
        count += keep
        if n_use < len(r_blk):
            break
    censored = ~(nearest < S)
    return np.where(censored, S, nearest), censored


def _ray_rng(seed):
    return np.random.default_rng([int(seed), 1])


def _run_trials(fn, args_list, jobs):
    if jobs is None or jobs <= 1 or len(args_list) < 2:
        return [fn(*a) for a in args_list]
    chunk = max(1, len(args_list) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args_list), chunksize=chunk))


def _volume_trial(config, seed, n_rays):
    if config.d == 2:
        rays = equiangular_rays(n_rays)
    else:
        rays = random_rays(config.d, n_rays, _ray_rng(seed))
    dist, censored = _stream_visible(config, make_rng(seed), rays)
    if config.d == 2:
        radial = float(np.sum(2.0 * np.sinh(0.5 * dist) ** 2))
    else:
        radial = sum(sinh_power_integral(config.d - 1, float(s)) for s in dist)
    return unit_sphere_area(config.d) * radial / n_rays, int(censored.sum())


def estimate_mean_volume(config, trials, n_rays, jobs=1):
    """Monte-Carlo mean hyperbolic volume of the visibility region (truncated at the cutoff).

    Each trial averages omega_d * int_0^{s_u} sinh^(d-1) over ``n_rays`` rays
    (equiangular in d = 2, uniform random otherwise). The censored fraction
    reports how many rays reached the cutoff; a large value means the estimate
    is biased low.
    """
    if trials < 1 or n_rays < 1:
        raise DomainError("trials and n_rays must be >= 1")
    results = _run_trials(_volume_trial,
                          [(config, trial_seed(config.seed, i), n_rays) for i in range(trials)], jobs)
    values = np.array([v for v, _ in results])
    censored = sum(c for _, c in results)
    se = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return VolumeEstimate(float(values.mean()), se, censored / (trials * n_rays))


def _distance_trial(config, seed, ray):
    dist, censored = _stream_visible(config, make_rng(seed), ray[None, :])
    return float(dist[0]), bool(censored[0])


def sample_visible_distances(config, trials, jobs=1):
    """One visible distance per independent trial, along e_1 (isotropy makes the ray irrelevant)."""
    ray = np.zeros(config.d)
    ray[0] = 1.0
    results = _run_trials(_distance_trial,
                          [(config, trial_seed(config.seed, i), ray) for i in range(trials)], jobs)
    dist = np.array([r[0] for r in results])
    censored = np.array([r[1] for r in results])
    return dist, censored


def merged_arcs(centers, half_widths, tol=ARC_TOL):
    """Union of closed arcs [c - w, c + w] on [0, 2 pi) as sorted disjoint intervals."""
    centers = np.asarray(centers, dtype=float)
    half_widths = np.asarray(half_widths, dtype=float)
    if centers.size == 0:
        return np.empty(0), np.empty(0)
    full = half_widths >= math.pi
    if np.any(full):
        return np.array([0.0]), np.array([TWO_PI])
    starts = np.mod(centers - half_widths, TWO_PI)
    ends = starts + 2.0 * half_widths
    wrap = ends > TWO_PI
    starts = np.concatenate([starts, np.zeros(int(wrap.sum()))])
    ends = np.concatenate([np.minimum(ends, TWO_PI), ends[wrap] - TWO_PI])
    return _merge(starts, ends, tol)


def _merge(starts, ends, tol):
    order = np.argsort(starts, kind="stable")
    s, e = starts[order], ends[order]
    run = np.maximum.accumulate(e)
    brk = s[1:] > run[:-1] + tol
    first = np.concatenate([[True], brk])
    last = np.concatenate([brk, [True]])
    return s[first], run[last]


def uncovered_length(starts, ends, tol=ARC_TOL):
    """Length of [0, 2 pi) not covered by merged intervals; 0 when gaps are all within tol."""
    if starts.size == 0:
        return TWO_PI
    gaps = np.concatenate([[starts[0]], starts[1:] - ends[:-1], [TWO_PI - ends[-1]]])
    gaps = gaps[gaps > tol]
    return float(gaps.sum())


def caps_cover_circle(angles, heights, tol=ARC_TOL):
    """Exact covering test for closed caps on S^1 given as (angle, height) pairs.

    Returns (covered, uncovered_length).
    """
    half = np.arccos(np.clip(np.asarray(heights, dtype=float), -1.0, 1.0))
    starts, ends = merged_arcs(angles, half, tol)
    gap = uncovered_length(starts, ends, tol)
    return gap == 0.0, gap


def covering_status(sample, mc_points=10_000, seed=None):
    """Do the shadows of the sample's hyperplanes cover the ideal boundary?

    d = 2 is decided exactly. In d >= 3 ``mc_points`` uniform boundary points
    are tested; a miss proves the sample does not cover yet, while no miss only
    leaves the question undecided.
    """
    cfg = sample.config
    heights = cap_height_phi_array(cfg.lam, sample.radii)
    n = len(sample)
    if cfg.d == 2:
        u = sample.directions
        angles = np.arctan2(u[:, 1], u[:, 0]) if n else np.empty(0)
        covered, gap = caps_cover_circle(angles, heights)
        if covered:
            return CoverageVerdict(COVERED, n, 0.0)
        return CoverageVerdict(NOT_COVERED_YET, n, gap / TWO_PI)
    if mc_points < 1:
        raise DomainError("mc_points must be >= 1")
    rng = _ray_rng(cfg.seed if seed is None else seed)
    pts = random_rays(cfg.d, mc_points, rng)
    hit = np.zeros(mc_points, dtype=bool)
    for lo in range(0, n, 2048):
        dots = pts[~hit] @ sample.directions[lo:lo + 2048].T
        hit[~hit] = np.any(dots >= heights[lo:lo + 2048], axis=1)
        if hit.all():
            break
    miss = float((~hit).mean())
    status = NOT_COVERED_YET if miss > 0.0 else UNDECIDED
    return CoverageVerdict(status, n, miss)


def _stream_covered(config, rng, first_check=64):
    """Exact d = 2 covering of the radius-truncated process, stopping as soon as it covers."""
    r_max = config.r_max
    starts, ends = np.empty(0), np.empty(0)
    pend_theta, pend_half = [], []
    count, pending, next_check = 0, 0, first_check
    for r_blk, u_blk in hyperplane_blocks(config, rng):
        keep = min(int(np.searchsorted(r_blk, r_max, side="right")), config.n_max - count)
        done = keep < len(r_blk)
        r, u = r_blk[:keep], u_blk[:keep]
        pend_theta.append(np.arctan2(u[:, 1], u[:, 0]))
        pend_half.append(np.arccos(cap_height_phi_array(config.lam, r)))
        count += keep
        pending += keep
        if count >= next_check or done:
            s_new, e_new = merged_arcs(np.concatenate(pend_theta), np.concatenate(pend_half))
            # the union so far stays as intervals; only new arcs are merged into it
            starts, ends = _merge(np.concatenate([starts, s_new]), np.concatenate([ends, e_new]),
                                  ARC_TOL)
            pend_theta, pend_half, pending = [], [], 0
            gap = uncovered_length(starts, ends)
            if gap == 0.0:
                return True, count
            next_check = 2 * count
        if done:
            return False, count
    raise AssertionError("unreachable")


def _covered_trial(config, seed):
    return _stream_covered(config, make_rng(seed))[0]


def estimate_covering_probability(config, trials, jobs=1, mc_points=2000):
    """Fraction of trials whose radius-truncated shadows already cover the boundary.

    This under-estimates the covering probability of the infinite process:
    trials not covered at the cutoff may be covered by deeper hyperplanes. The
    half-width is the normal-approximation 99% interval. For d >= 3 a trial
    counts as covered when none of ``mc_points`` test points is missed, which
    is statistical evidence only.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    seeds = [trial_seed(config.seed, i) for i in range(trials)]
    if config.d == 2:
        flags = _run_trials(_covered_trial, [(config, s) for s in seeds], jobs)
    else:
        flags = [covering_status(sample_process(config.with_seed(s)), mc_points).status != NOT_COVERED_YET
                 for s in seeds]
    frac = sum(flags) / trials
    return CoveringEstimate(frac, Z99 * math.sqrt(frac * (1.0 - frac) / trials))


def phase_scan(d, lam, gammas, trials, S, seed=0, n_max=None, jobs=1):
    """Covering fraction for each intensity, sorted by intensity."""
    gammas = sorted(float(g) for g in gammas)
    if not gammas:
        raise DomainError("need at least one intensity")
    rows = []
    for g in gammas:
        cfg = SimConfig(d, lam, g, S, seed=seed) if n_max is None else SimConfig(d, lam, g, S, n_max, seed)
        est = estimate_covering_probability(cfg, trials, jobs)
        rows.append({"gamma": g, "fraction_covered": est.fraction_covered,
                     "ci_halfwidth": est.ci_halfwidth, "gamma_crit": gamma_crit(d)})
    return rows


def shepp_diagnostic(config, n_terms):
    """Arc fractions l_n = arccos(phi(r_n)) / pi of the first ``n_terms`` shadows in d = 2,
    with n * l_n and the partial sums of sum_n n^-2 exp(l_1 + ... + l_n).
    """
    if config.d != 2:
        raise UnsupportedDimensionError("the Shepp diagnostic is defined for d = 2 only")
    if n_terms < 10:
        raise DomainError("n_terms must be >= 10")
    sample = sample_process(SimConfig(2, config.lam, config.gamma, config.s_cutoff, n_terms, config.seed))
    if len(sample) < n_terms:
        raise DomainError(
            f"only {len(sample)} hyperplanes inside the cutoff {config.s_cutoff}; raise s_cutoff")
    ell = np.arccos(cap_height_phi_array(config.lam, sample.radii)) / math.pi
    n = np.arange(1, n_terms + 1)
    partial = np.cumsum(np.exp(np.cumsum(ell)) / n ** 2)
    return [{"n": int(k), "r_n": float(r), "ell_n": float(l), "n_ell_n": float(k * l),
             "partial_sum": float(ps)}
            for k, r, l, ps in zip(n, sample.radii, ell, partial)]

import math

import numpy as np
import pytest
from scipy import stats

from hypvis.errors import DomainError, UnsupportedDimensionError
from hypvis.geometry import cap_height_phi, cap_height_phi_array, first_hit_matrix
from hypvis.measures import ModelParams, expected_volume_closed, sinh_power_integral, unit_sphere_area
from hypvis.sampler import ProcessSample, SimConfig, make_rng, sample_process, trial_seed
from hypvis.visibility import (COVERED, NOT_COVERED_YET, UNDECIDED, _stream_covered,
                               _stream_visible, caps_cover_circle, covering_status,
                               equiangular_rays, estimate_covering_probability,
                               estimate_mean_volume, merged_arcs, phase_scan, random_rays,
                               sample_visible_distances, shepp_diagnostic, uncovered_length,
                               visibility_profile, visible_distance)

E1 = np.array([1.0, 0.0])


def manual_sample(radii, dirs, d=2, lam=0.5, S=5.0):
    cfg = SimConfig(d, lam, 1.0, S)
    return ProcessSample(cfg, np.asarray(radii, dtype=float), np.asarray(dirs, dtype=float).reshape(-1, d))


def test_empty_sample_is_censored():
    assert visible_distance(manual_sample([], []), E1) == (5.0, True)


def test_single_hyperplane_on_the_ray():
    dist, censored = visible_distance(manual_sample([0.4], [E1]), E1)
    assert dist == pytest.approx(2 * math.atanh(0.4), rel=1e-14)
    assert not censored


def test_profile_invariants():
    s = sample_process(SimConfig(2, 0.5, 2.0, 4.0, seed=3))
    prof = visibility_profile(s, equiangular_rays(200))
    assert len(prof.distances) == len(prof.censored) == 200
    assert np.all(prof.distances[prof.censored] == 4.0)
    assert np.all(prof.distances[~prof.censored] < 4.0)
    assert np.all(prof.distances >= 0.0)


@pytest.mark.parametrize("d,lam,gamma,S", [(2, 0.0, 3 * math.pi, 6.0), (2, 1.0, 2.0, 7.0),
                                           (3, 0.5, 10.0, 2.5)])
def test_streaming_equals_full_sample(d, lam, gamma, S):
    for seed in range(5):
        cfg = SimConfig(d, lam, gamma, S, seed=seed)
        rays = equiangular_rays(90) if d == 2 else random_rays(d, 60, np.random.default_rng(seed))
        full = visibility_profile(sample_process(cfg), rays)
        dist, censored = _stream_visible(cfg, make_rng(seed), rays)
        assert np.array_equal(dist, full.distances)
        assert np.array_equal(censored, full.censored)


def test_cutoff_exactness():
    rays = equiangular_rays(120)
    for seed in range(5):
        small = visibility_profile(sample_process(SimConfig(2, 0.3, 2.5, 4.0, seed=seed)), rays)
        big = visibility_profile(sample_process(SimConfig(2, 0.3, 2.5, 8.0, seed=seed)), rays)
        seen = ~small.censored
        assert np.array_equal(small.distances[seen], big.distances[seen])
        assert np.all(big.distances[small.censored] >= 4.0)


def test_caps_examples():
    covered, gap = caps_cover_circle([0.0, math.pi], [0.0, 0.0])
    assert covered and gap == 0.0
    covered, _ = caps_cover_circle(np.radians([0.0, 120.0, 240.0]), [0.5, 0.5, 0.5])
    assert covered
    covered, gap = caps_cover_circle([1.0], [0.3])
    assert not covered
    assert gap == pytest.approx(2 * math.pi - 2 * math.acos(0.3), rel=1e-14)


def test_covering_status_single_cap():
    r = 0.6
    v = covering_status(manual_sample([r], [[0.0, 1.0]]), 1)
    assert v.status == NOT_COVERED_YET
    assert v.caps_used == 1
    phi = cap_height_phi(0.5, r)
    assert v.uncovered_measure_estimate * 2 * math.pi == pytest.approx(2 * math.pi - 2 * math.acos(phi), rel=1e-13)


def test_slightly_short_caps_leave_gaps():
    h = 0.5 + 1e-9
    covered, gap = caps_cover_circle(np.radians([0.0, 120.0, 240.0]), [h] * 3)
    assert not covered and gap > 0.0


def test_merged_arcs_wraparound():
    starts, ends = merged_arcs([0.0, 3.0], [0.5, 0.2])
    assert np.allclose(starts, [0.0, 2.8, 2 * math.pi - 0.5])
    assert np.allclose(ends, [0.5, 3.2, 2 * math.pi])
    assert uncovered_length(starts, ends) == pytest.approx(2 * math.pi - 1.4)


def test_full_arc():
    starts, ends = merged_arcs([2.0], [math.pi])
    assert uncovered_length(starts, ends) == 0.0


def test_streamed_coverage_matches_exact_union():
    for gamma in [2.0, math.pi, 7.0]:
        for seed in range(6):
            cfg = SimConfig(2, 0.5, gamma, 7.0, seed=seed)
            exact = covering_status(sample_process(cfg)).status == COVERED
            assert _stream_covered(cfg, make_rng(seed))[0] == exact


def test_coverage_iff_all_rays_blocked():
    # covered => every ray meets a hyperplane (possibly beyond the cutoff);
    # not covered => the middle of a gap is unblocked
    rays = equiangular_rays(720)
    n_cov = n_open = 0
    for i in range(1000):
        s = sample_process(SimConfig(2, 0.5, 4.0, 4.0, seed=trial_seed(77, i)))
        v = covering_status(s)
        if v.status == COVERED:
            n_cov += 1
            nearest = first_hit_matrix(0.5, s.radii, s.directions, rays).min(axis=1)
            assert np.all(np.isfinite(nearest))
        else:
            n_open += 1
            angles = np.arctan2(s.directions[:, 1], s.directions[:, 0])
            half = np.arccos(cap_height_phi_array(0.5, s.radii))
            starts, ends = merged_arcs(angles, half)
            gaps_lo = np.concatenate([[0.0], ends])
            gaps_hi = np.concatenate([starts, [2 * math.pi]])
            k = int(np.argmax(gaps_hi - gaps_lo))
            mid = 0.5 * (gaps_lo[k] + gaps_hi[k])
            assert visible_distance(s, np.array([math.cos(mid), math.sin(mid)]))[1]
    assert n_cov > 50 and n_open > 50


def test_statistical_coverage_d3():
    sparse = sample_process(SimConfig(3, 0.5, 1.0, 1.0, seed=1))
    v = covering_status(sparse, 2000)
    assert v.status == NOT_COVERED_YET and v.uncovered_measure_estimate > 0.0
    dense = manual_sample([0.0, 0.0], [[0, 0, 1.0], [0, 0, -1.0]], d=3)
    v = covering_status(dense, 500)
    assert v.status == UNDECIDED and v.uncovered_measure_estimate == 0.0


def test_covering_probability_rejects_zero_trials():
    with pytest.raises(DomainError):
        estimate_covering_probability(SimConfig(2, 0.5, 7.0, 6.0), 0)


def test_covering_probability_regimes():
    hi = estimate_covering_probability(SimConfig(2, 0.5, 7.0, 8.0, seed=1), 100)
    lo = estimate_covering_probability(SimConfig(2, 0.5, 2.0, 8.0, seed=1), 100)
    assert hi.fraction_covered > 0.9
    assert lo.fraction_covered < 0.5
    assert lo.ci_halfwidth == pytest.approx(2.5758293 * math.sqrt(lo[0] * (1 - lo[0]) / 100), rel=1e-6)


def test_covering_fraction_monotone_in_cutoff():
    a = estimate_covering_probability(SimConfig(2, 0.5, 3.5, 4.0, seed=9), 60).fraction_covered
    b = estimate_covering_probability(SimConfig(2, 0.5, 3.5, 8.0, seed=9), 60).fraction_covered
    assert b >= a


def test_volume_empty_sample():
    for d in [2, 3]:
        est = estimate_mean_volume(SimConfig(d, 0.5, 1e-12, 1.5, seed=1), 3, 16)
        assert est.censored_fraction == 1.0
        assert est.estimate == pytest.approx(unit_sphere_area(d) * sinh_power_integral(d - 1, 1.5), rel=1e-12)
        assert est.std_error == 0.0


def test_volume_d3_consistency():
    cfg = SimConfig(3, 0.5, 20.0, 4.0, seed=2)
    est = estimate_mean_volume(cfg, 200, 48)
    target = expected_volume_closed(ModelParams(3, 0.5, 20.0))
    assert est.censored_fraction < 1e-3
    assert abs(est.estimate - target) <= 3.5 * est.std_error


def test_parallel_trials_match_serial():
    cfg = SimConfig(2, 1.0, 3 * math.pi, 10.0, seed=4)
    assert estimate_mean_volume(cfg, 12, 36, jobs=1) == estimate_mean_volume(cfg, 12, 36, jobs=2)
    cfg = SimConfig(2, 0.5, math.pi, 6.0, seed=4)
    assert estimate_covering_probability(cfg, 12, jobs=2) == estimate_covering_probability(cfg, 12)


def test_exponential_law_small():
    dist, censored = sample_visible_distances(SimConfig(2, 0.5, 3 * math.pi, 8.0, seed=6), 3000)
    assert censored.sum() == 0
    assert stats.kstest(dist, "expon", args=(0, 1 / 3)).pvalue > 0.01


def test_phase_scan_table():
    rows = phase_scan(2, 0.5, [7.0, 2.0, math.pi], 40, 6.0, seed=3)
    assert [r["gamma"] for r in rows] == [2.0, math.pi, 7.0]
    fr = [r["fraction_covered"] for r in rows]
    assert fr == sorted(fr)  # common random numbers make coverage monotone in gamma
    assert phase_scan(2, 0.5, [7.0, 2.0, math.pi], 40, 6.0, seed=3) == rows
    assert len(phase_scan(2, 0.5, [3.0], 5, 4.0)) == 1
    with pytest.raises(DomainError):
        phase_scan(2, 0.5, [], 5, 4.0)


def test_shepp_table_shape():
    rows = shepp_diagnostic(SimConfig(2, 0.0, math.pi, 30.0, seed=1), 10)
    assert [r["n"] for r in rows] == list(range(1, 11))
    assert all(0.0 < r["ell_n"] <= 0.5 for r in rows)
    with pytest.raises(UnsupportedDimensionError):
        shepp_diagnostic(SimConfig(3, 0.0, 8.0, 5.0), 10)
    with pytest.raises(DomainError):
        shepp_diagnostic(SimConfig(2, 0.0, math.pi, 30.0), 9)


@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_shepp_asymptotics(lam):
    rows = shepp_diagnostic(SimConfig(2, lam, math.pi, 30.0, seed=5), 1000)
    tail = np.mean([r["n_ell_n"] for r in rows[899:]])
    assert tail == pytest.approx(1.0, abs=0.15)
    assert rows[999]["partial_sum"] > rows[99]["partial_sum"]

import json
import math

import numpy as np
import pytest
from scipy import stats

from hypvis.errors import DomainError
from hypvis.measures import ModelParams, radial_cumulative
from hypvis.sampler import (COUNT_CAP, RADIUS_CUTOFF, ProcessSample, SimConfig,
                            hyperplane_blocks, radii_asymptotics_diagnostic, sample_direction,
                            sample_process, trial_seed)


def cutoff_for_radius(r):
    return 2.0 * math.atanh(r)


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(2, 0.5, 1.0, 0.0)
    with pytest.raises(DomainError):
        SimConfig(2, 0.5, 1.0, 80.0)  # tanh(40) rounds to 1
    with pytest.raises(DomainError):
        SimConfig(2, 0.5, 1.0, 5.0, n_max=0)
    with pytest.raises(DomainError):
        SimConfig(2, 0.5, 1.0, 5.0, seed=-1)
    assert SimConfig(2, 0.5, 1.0, cutoff_for_radius(0.9)).r_max == pytest.approx(0.9)


def test_direction_d2_is_centred():
    rng = np.random.default_rng(1)
    x = np.array([sample_direction(2, rng)[0] for _ in range(100_000)])
    assert abs(x.mean()) <= 3 * x.std() / math.sqrt(x.size)


def test_direction_d3_second_moment():
    rng = np.random.default_rng(2)
    x2 = np.array([sample_direction(3, rng)[0] for _ in range(100_000)]) ** 2
    assert abs(x2.mean() - 1 / 3) <= 3 * x2.std() / math.sqrt(x2.size)


def test_direction_determinism():
    a = [sample_direction(4, np.random.default_rng(9)) for _ in range(3)]
    b = [sample_direction(4, np.random.default_rng(9)) for _ in range(3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_sample_invariants():
    s = sample_process(SimConfig(2, 0.5, 2.0, 8.0, seed=4))
    assert s.truncated_by == RADIUS_CUTOFF
    assert np.all(np.diff(s.radii) > 0)
    assert np.all((s.radii > 0) & (s.radii <= s.config.r_max))
    assert np.allclose(np.linalg.norm(s.directions, axis=1), 1.0, atol=1e-12)


def test_determinism_bitwise():
    cfg = SimConfig(2, 0.5, 2.0, 9.0, seed=42)
    a, b = sample_process(cfg), sample_process(cfg)
    assert a.radii.tobytes() == b.radii.tobytes()
    assert a.to_json() == b.to_json()


def test_stream_independent_of_block_size():
    cfg = SimConfig(3, 0.4, 2.0, 3.0, seed=5)
    def first(n, **kw):
        out = []
        for r, _ in hyperplane_blocks(cfg, **kw):
            out.extend(r)
            if len(out) >= n:
                return np.array(out[:n])
    a = first(300, first_block=1, max_block=7)
    b = first(300, first_block=64, max_block=64)
    assert np.array_equal(a, b)


def test_count_cap():
    s = sample_process(SimConfig(2, 1.0, math.pi, 30.0, n_max=1000, seed=1))
    assert len(s) == 1000 and s.truncated_by == COUNT_CAP


def test_larger_cutoff_extends_same_prefix():
    small = sample_process(SimConfig(2, 0.3, 2.0, 6.0, seed=8))
    big = sample_process(SimConfig(2, 0.3, 2.0, 9.0, seed=8))
    assert np.array_equal(big.radii[:len(small)], small.radii)
    assert big.radii[len(small)] > small.config.r_max


def test_mean_count_matches_cumulative():
    z = 0.5
    cfg = SimConfig(2, 1.0, 1.0, cutoff_for_radius(z))
    counts = np.array([len(sample_process(cfg.with_seed(trial_seed(3, i)))) for i in range(1000)])
    expected = radial_cumulative(ModelParams(2, 1.0, 1.0), z)
    assert expected == pytest.approx(2.0)
    assert abs(counts.mean() - expected) <= 4 * counts.std(ddof=1) / math.sqrt(counts.size)


def test_void_probability():
    cfg = SimConfig(2, 0.5, 0.1, cutoff_for_radius(0.9))
    p_empty = math.exp(-radial_cumulative(ModelParams(2, 0.5, 0.1), 0.9))
    n = 2000
    empty = sum(len(sample_process(cfg.with_seed(i))) == 0 for i in range(n))
    assert abs(empty / n - p_empty) <= 4 * math.sqrt(p_empty * (1 - p_empty) / n)


@pytest.mark.parametrize("d", [2, 3])
def test_radii_marginal_ks(d):
    # given the count, F(r_i) / F(r_max) are i.i.d. uniform
    z = 0.9 if d == 2 else 0.6
    p = ModelParams(d, 0.5, 1.5)
    cfg = SimConfig(d, 0.5, 1.5, cutoff_for_radius(z))
    total = radial_cumulative(p, z)
    u = []
    for i in range(1000 if d == 2 else 200):
        s = sample_process(cfg.with_seed(trial_seed(17, i)))
        u.extend(radial_cumulative(p, float(r)) / total for r in s.radii)
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_json_roundtrip():
    s = sample_process(SimConfig(3, 0.2, 1.0, 2.0, seed=6))
    text = s.to_json()
    back = ProcessSample.from_json(text)
    assert back.config == s.config
    assert np.array_equal(back.radii, s.radii)
    assert np.array_equal(back.directions, s.directions)
    assert set(json.loads(text)) == {"config", "radii", "dirs", "truncated_by"}


@pytest.mark.parametrize("d,gamma,lam,limit", [(2, math.pi, 0.0, math.pi), (2, math.pi, 1.0, 2 * math.pi),
                                               (3, 8.0, 0.0, 2.0)])
def test_radii_asymptotic_limits(d, gamma, lam, limit):
    cfg = SimConfig(d, lam, gamma, 30.0 if d == 2 else 8.0, n_max=100 if d == 2 else 30)
    rows = radii_asymptotics_diagnostic([sample_process(cfg.with_seed(i)) for i in range(3)])
    assert rows[-1]["limit"] == pytest.approx(limit, rel=1e-14)


def test_radii_diagnostic_d2_converges():
    cfg = SimConfig(2, 0.5, 2.0, 30.0, n_max=1000)
    rows = radii_asymptotics_diagnostic([sample_process(cfg.with_seed(i)) for i in range(100)])
    last = rows[-1]
    assert last["n"] == 1000
    assert abs(last["mean"] - last["limit"]) <= 4 * last["std_error"] + 0.01 * last["limit"]
    assert last["first_order_gap"] == pytest.approx(2.0 * 1.5 / 1000)

"""Seeded generation of the Poisson process of lambda-geodesic hyperplanes.

Hyperplanes are produced in order of increasing Euclidean distance r by
pushing the arrival times P_1 < P_2 < ... of a unit-rate Poisson process
through the radial quantile, r_n = tau(P_n), and pairing each with an
independent uniform direction.

Random stream contract (numpy PCG64 via ``default_rng(seed)``): hyperplane n
consumes exactly ``d + 2`` consecutive standard normals. The first two give the
Exp(1) increment P_n - P_{n-1} as half their squared norm; the remaining ``d``
are normalized into the direction. Because numpy fills normal arrays in
sequence, the stream is the same whatever block size is used to draw it.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .measures import ModelParams, radial_quantiles_sorted, radial_s_sorted

DEFAULT_N_MAX = 10 ** 6
RADIUS_CUTOFF = "radius_cutoff"
COUNT_CAP = "count_cap"


@dataclass(frozen=True)
class SimConfig:
    d: int
    lam: float
    gamma: float
    s_cutoff: float
    n_max: int = DEFAULT_N_MAX
    seed: int = 0

    def __post_init__(self):
        ModelParams(self.d, self.lam, self.gamma)
        if not self.s_cutoff > 0.0:
            raise DomainError(f"cutoff must be positive, got {self.s_cutoff!r}")
        if not self.r_max < 1.0:
            raise DomainError(f"cutoff {self.s_cutoff!r} is too large for float64 radii")
        if self.n_max < 1:
            raise DomainError(f"n_max must be >= 1, got {self.n_max!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def r_max(self):
        return math.tanh(0.5 * self.s_cutoff)

    @property
    def params(self):
        return ModelParams(self.d, self.lam, self.gamma)

    def with_seed(self, seed):
        return SimConfig(self.d, self.lam, self.gamma, self.s_cutoff, self.n_max, seed)

    def to_dict(self):
        return {"d": self.d, "lambda": self.lam, "gamma": self.gamma,
                "s_cutoff": self.s_cutoff, "n_max": self.n_max, "seed": self.seed}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["d"]), float(data["lambda"]), float(data["gamma"]),
                   float(data["s_cutoff"]), int(data.get("n_max", DEFAULT_N_MAX)),
                   int(data.get("seed", 0)))


def trial_seed(seed, trial_index):
    """Seed of an individual Monte-Carlo trial: seed XOR trial index."""
    return (int(seed) ^ int(trial_index)) & (2 ** 64 - 1)


def make_rng(seed):
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class ProcessSample:
    config: SimConfig
    radii: np.ndarray
    directions: np.ndarray
    truncated_by: str = RADIUS_CUTOFF
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.radii) != len(self.directions):
            raise DomainError("radii and directions differ in length")

    def __len__(self):
        return len(self.radii)

    def to_json(self):
        doc = {
            "config": self.config.to_dict(),
            "radii": [float(r) for r in self.radii],
            "dirs": [[float(x) for x in u] for u in self.directions],
            "truncated_by": self.truncated_by,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        config = SimConfig.from_dict(doc["config"])
        radii = np.array(doc["radii"], dtype=float)
        dirs = np.array(doc["dirs"], dtype=float).reshape(len(radii), config.d)
        return cls(config, radii, dirs, doc.get("truncated_by", RADIUS_CUTOFF))


def sample_direction(d, rng):
    """Uniform point on S^(d-1) by normalizing an isotropic Gaussian vector."""
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def hyperplane_blocks(config, rng=None, first_block=32, max_block=4096):
    """Yield (radii, directions) blocks of the untruncated process in stream order.

    Blocks double in size up to ``max_block``. Consumers decide when to stop;
    the values never depend on the block sizes: arrivals are a sequential
    running sum and for d >= 3 the quantile solve continues from the previous
    block's last point.
    """
    if rng is None:
        rng = make_rng(config.seed)
    p = config.params
    d = config.d
    arrival = 0.0
    state = (0.0, 0.0)
    size = first_block
    while True:
        z = rng.standard_normal((size, d + 2))
        incr = 0.5 * (z[:, 0] ** 2 + z[:, 1] ** 2)
        arrivals = np.cumsum(np.concatenate([[arrival], incr]))[1:]
        arrival = float(arrivals[-1])
        dirs = z[:, 2:] / np.linalg.norm(z[:, 2:], axis=1, keepdims=True)
        if d == 2:
            radii = radial_quantiles_sorted(p, arrivals)
        else:
            s = radial_s_sorted(p, arrivals, start=state)
            state = (float(s[-1]), arrival)
            radii = np.tanh(0.5 * s)
        yield radii, dirs
        size = min(2 * size, max_block)


def sample_process(config):
    """Realization truncated at r_max = tanh(s_cutoff / 2) or at n_max hyperplanes."""
    radii, dirs = [], []
    count = 0
    truncated_by = RADIUS_CUTOFF
    r_max = config.r_max
    for r_blk, u_blk in hyperplane_blocks(config):
        inside = int(np.searchsorted(r_blk, r_max, side="right"))
        room = config.n_max - count
        if inside > room or inside == room == len(r_blk):
            keep, done, truncated_by = room, True, COUNT_CAP
        else:
            keep, done = inside, inside < len(r_blk)
        radii.append(r_blk[:keep])
        dirs.append(u_blk[:keep])
        count += keep
        if done:
            break
    radii = np.concatenate(radii) if radii else np.empty(0)
    dirs = np.concatenate(dirs) if dirs else np.empty((0, config.d))
    return ProcessSample(config, radii, dirs, truncated_by)


def radii_asymptotics_diagnostic(samples, checkpoints=None):
    """Mean of n^(1/(d-1)) (1 - r_n) across samples at several n, with its limit.

    Rows: dicts with n, mean, std_error, limit and, for d = 2, the first-order
    prediction gamma (1 + lambda) / n of 1 - r_n next to the observed mean.
    """
    samples = list(samples)
    if not samples:
        raise DomainError("need at least one sample")
    cfg = samples[0].config
    d, lam, gamma = cfg.d, cfg.lam, cfg.gamma
    n_avail = min(len(s) for s in samples)
    if checkpoints is None:
        checkpoints = [n for n in (10, 30, 100, 300, 1000, 3000, 10000) if n <= n_avail]
        if n_avail not in checkpoints:
            checkpoints.append(n_avail)
    limit = (gamma / (d - 1)) ** (1.0 / (d - 1)) * (1.0 + lam)
    rows = []
    for n in checkpoints:
        if n > n_avail or n < 1:
            continue
        gap = np.array([1.0 - s.radii[n - 1] for s in samples])
        scaled = n ** (1.0 / (d - 1)) * gap
        row = {"n": n, "mean": float(scaled.mean()),
               "std_error": float(scaled.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else math.nan,
               "limit": limit}
        if d == 2:
            row["mean_gap"] = float(gap.mean())
            row["first_order_gap"] = gamma * (1.0 + lam) / n
        rows.append(row)
    return rows


__all__ = ["SimConfig", "ProcessSample", "sample_direction", "sample_process",
           "hyperplane_blocks", "radii_asymptotics_diagnostic", "trial_seed", "make_rng",
           "RADIUS_CUTOFF", "COUNT_CAP"]

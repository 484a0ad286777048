"""Visibility in Poisson processes of lambda-geodesic hyperplanes in hyperbolic space."""
__version__ = "0.1.0"

from .errors import (ConvergenceError, DegenerateHyperplaneError, DivergenceError, DomainError,
                     UnsupportedDimensionError)
from .geometry import (LambdaHyperplane, SegmentSpec, ShadowCap, cap_height_phi, cap_measure,
                       critical_radius_rc, dist_origin, dist_pair, euclid_radius, hits_segment,
                       hits_segment_bruteforce, ray_first_hit)
from .measures import (ModelParams, expected_volume_closed, gamma_crit, gamma_star,
                       hitting_measure_closed, hitting_measure_quadrature, radial_cumulative,
                       radial_quantile, shadow_intensity, sinh_exp_integral)
from .numerics import QuadratureResult, adaptive_integrate, bracketed_root, log_gamma
from .render import RenderOptions, render_disc_svg
from .sampler import ProcessSample, SimConfig, sample_process
from .visibility import (CoverageVerdict, VisibilityProfile, covering_status,
                         estimate_covering_probability, estimate_mean_volume, phase_scan,
                         shepp_diagnostic, visible_distance)

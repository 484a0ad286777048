"""Deterministic SVG pictures of planar scenes in the Poincare disc."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedDimensionError
from .visibility import equiangular_rays, visibility_profile

ANGLE_TOL = 1e-9
DISC_FRACTION = 0.48


@dataclass(frozen=True)
class RenderOptions:
    canvas_px: int = 1000
    n_boundary_rays: int = 720
    show_region: bool = True
    stroke_width_px: float = 1.0
    hyperplane_color: str = "black"
    region_color: str = "red"

    def __post_init__(self):
        if self.canvas_px < 100:
            raise DomainError(f"canvas_px must be >= 100, got {self.canvas_px!r}")
        if self.n_boundary_rays < 16:
            raise DomainError(f"n_boundary_rays must be >= 16, got {self.n_boundary_rays!r}")
        if not self.stroke_width_px > 0.0:
            raise DomainError("stroke_width_px must be positive")


def boundary_cos_angle(center, radius):
    """Cosine of the angle at which a circle meets the unit circle: (1 + R^2 - |c|^2) / (2R)."""
    c2 = float(np.dot(center, center))
    return (1.0 - c2 + radius * radius) / (2.0 * radius)


def _fmt(x):
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def render_disc_svg(sample, profile=None, opts=None):
    """SVG text for a d = 2 sample: hyperplanes as disc-clipped circles, the visibility region in red.

    ``profile`` should come from an equiangular ray grid; when omitted and the
    region is shown, one with ``opts.n_boundary_rays`` rays is computed.
    """
    opts = opts or RenderOptions()
    cfg = sample.config
    if cfg.d != 2:
        raise UnsupportedDimensionError(f"disc rendering needs d = 2, got d = {cfg.d}")
    n = opts.canvas_px
    half = 0.5 * n
    scale = DISC_FRACTION * n
    lam = cfg.lam

    def px(x, y):
        return _fmt(half + scale * x), _fmt(half - scale * y)

    shapes = []
    for r, u in zip(sample.radii, sample.directions):
        r = float(r)
        if lam + r == 0.0:
            # flat geodesic through the origin: the diameter orthogonal to u
            (x1, y1), (x2, y2) = px(-u[1], u[0]), px(u[1], -u[0])
            shapes.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
            continue
        R = (1.0 - r * r) / (2.0 * (lam + r))
        center = (r + R) * np.asarray(u, dtype=float)
        cos_theta = boundary_cos_angle(center, R)
        if abs(cos_theta - lam) > ANGLE_TOL:
            raise DomainError(
                f"hyperplane at r={r!r} meets the boundary with cos(theta)={cos_theta!r}, not {lam!r}")
        cx, cy = px(center[0], center[1])
        shapes.append(f'<circle cx="{cx}" cy="{cy}" r="{_fmt(scale * R)}"/>')

    sw = _fmt(opts.stroke_width_px)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{n}" height="{n}" '
        f'viewBox="0 0 {n} {n}">',
        f"<!-- d=2 lambda={cfg.lam!r} gamma={cfg.gamma!r} s_cutoff={cfg.s_cutoff!r} "
        f"seed={cfg.seed} hyperplanes={len(sample)} -->",
        f'<defs><clipPath id="disc"><circle cx="{_fmt(half)}" cy="{_fmt(half)}" '
        f'r="{_fmt(scale)}"/></clipPath></defs>',
    ]
    if opts.show_region:
        if profile is None:
            profile = visibility_profile(sample, equiangular_rays(opts.n_boundary_rays))
        pts = " ".join(",".join(px(x, y)) for x, y in region_polygon(profile))
        lines.append(f'<polygon points="{pts}" fill="{opts.region_color}" fill-opacity="0.5" '
                     f'stroke="{opts.region_color}" stroke-width="{sw}"/>')
    lines.append(f'<g clip-path="url(#disc)" fill="none" stroke="{opts.hyperplane_color}" '
                 f'stroke-width="{sw}">')
    lines.extend(shapes)
    lines.append("</g>")
    lines.append(f'<circle cx="{_fmt(half)}" cy="{_fmt(half)}" r="{_fmt(scale)}" fill="none" '
                 f'stroke="black" stroke-width="{_fmt(2 * opts.stroke_width_px)}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def region_polygon(profile):
    """Euclidean vertices tanh(distance / 2) * direction of the visibility polygon."""
    rho = np.tanh(0.5 * np.asarray(profile.distances, dtype=float))
    return rho[:, None] * np.asarray(profile.directions, dtype=float)


__all__ = ["RenderOptions", "render_disc_svg", "boundary_cos_angle", "region_polygon"]

"""Equirectangular panoramas, viewpoint sampling and rectilinear viewports.

Longitude 0 sits at the horizontal centre of the panorama and increases to the
east (rightwards, wrapping at the seam); latitude +90 is the top row.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class ErpImage:
    """Equirectangular luma raster with values in [0, 1]."""

    luma: np.ndarray

    def __post_init__(self):
        luma = np.asarray(self.luma, dtype=np.float64)
        if luma.ndim != 2 or luma.shape[0] < 2 or luma.shape[1] < 2:
            raise InvalidArgumentError(f"ERP image must be 2-D and at least 2x2, got {luma.shape}")
        if not np.all(np.isfinite(luma)) or luma.min() < 0.0 or luma.max() > 1.0:
            raise InvalidArgumentError("ERP luma must be finite and within [0, 1]")
        luma.setflags(write=False)
        object.__setattr__(self, "luma", luma)

    @property
    def width(self):
        return self.luma.shape[1]

    @property
    def height(self):
        return self.luma.shape[0]


@dataclass(frozen=True)
class ErpStereoPair:
    left: ErpImage
    right: ErpImage

    def __post_init__(self):
        if self.left.luma.shape != self.right.luma.shape:
            raise InvalidArgumentError(
                f"left/right size mismatch: {self.left.luma.shape} vs {self.right.luma.shape}")

    def swapped(self):
        return ErpStereoPair(self.right, self.left)


@dataclass(frozen=True)
class Viewpoint:
    longitude_deg: float
    latitude_deg: float

    def __post_init__(self):
        if not 0.0 <= self.longitude_deg < 360.0:
            raise InvalidArgumentError(f"longitude {self.longitude_deg} outside [0, 360)")
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise InvalidArgumentError(f"latitude {self.latitude_deg} outside [-90, 90]")


@dataclass(frozen=True, eq=False)
class ViewportImage:
    luma: np.ndarray
    center: Viewpoint
    fov_deg: float = 90.0

    @property
    def side(self):
        return self.luma.shape[0]


def _ring_count(n0, lat_deg):
    # the epsilon absorbs cos() rounding when n0*cos is an exact integer
    return int(math.floor(n0 * math.cos(math.radians(lat_deg)) + 1e-9))


def sample_viewpoints(n0):
    """Latitude-adaptive viewpoint set for ``n0`` equatorial samples.

    Rings sit every ``360/n0`` degrees of latitude and carry
    ``floor(n0 * cos(lat))`` evenly spaced points starting at longitude 0.
    Each pole is sampled exactly once.

    >>> len(sample_viewpoints(8))
    20
    """
    if int(n0) != n0 or n0 < 4:
        raise InvalidArgumentError(f"n0 must be an integer >= 4, got {n0!r}")
    n0 = int(n0)
    theta = 360.0 / n0
    last = int(math.floor(90.0 / theta + 1e-9))
    points = [Viewpoint(k * theta, 0.0) for k in range(n0)]

    rings = list(range(1, last))
    if not math.isclose(last * theta, 90.0):
        rings.append(last)
    for m in rings:
        lat = m * theta
        count = _ring_count(n0, lat)
        for sign in (1.0, -1.0):
            points.extend(Viewpoint(k * 360.0 / count, sign * lat) for k in range(count))
    points.append(Viewpoint(0.0, 90.0))
    points.append(Viewpoint(0.0, -90.0))
    return points


def default_viewport_side(erp_width, fov_deg=90.0):
    """Viewport side whose angular pitch matches the panorama equator."""
    return int(math.floor(erp_width * fov_deg / 360.0 + 0.5))


def _camera_basis(center):
    lon = math.radians(center.longitude_deg)
    lat = math.radians(center.latitude_deg)
    forward = np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])
    east = np.array([-math.sin(lon), math.cos(lon), 0.0])
    north = np.array([-math.sin(lat) * math.cos(lon), -math.sin(lat) * math.sin(lon), math.cos(lat)])
    return forward, east, north


def viewport_rays(center, fov_deg, side):
    """Unit view directions for every output pixel, shape ``(side, side, 3)``."""
    forward, east, north = _camera_basis(center)
    half = math.tan(math.radians(fov_deg) / 2.0)
    # pixel centres on the tangent plane at unit distance
    t = ((np.arange(side) + 0.5) / side * 2.0 - 1.0) * half
    x = t[None, :, None]
    y = t[:, None, None]
    rays = forward + x * east - y * north
    return rays / np.linalg.norm(rays, axis=2, keepdims=True)


def rays_to_lonlat(rays):
    """Convert direction vectors to (longitude, latitude) in degrees."""
    lon = np.degrees(np.arctan2(rays[..., 1], rays[..., 0]))
    lat = np.degrees(np.arcsin(np.clip(rays[..., 2], -1.0, 1.0)))
    return lon, lat


def render_viewport(erp, center, fov_deg=90.0, side=None):
    """Gnomonic projection of ``erp`` around ``center``, bilinearly sampled."""
    if side is None:
        side = default_viewport_side(erp.width, fov_deg)
    if int(side) != side or side < 16:
        raise InvalidArgumentError(f"viewport side must be an integer >= 16, got {side!r}")
    if not 0.0 < fov_deg < 180.0:
        raise InvalidArgumentError(f"fov_deg must lie in (0, 180), got {fov_deg!r}")
    lon, lat = rays_to_lonlat(viewport_rays(center, fov_deg, int(side)))
    h, w = erp.luma.shape
    u = (lon / 360.0 + 0.5) * w - 0.5
    v = (90.0 - lat) / 180.0 * h - 0.5
    luma = kernels.bilinear_sample(erp.luma, u, v)
    return ViewportImage(np.clip(luma, 0.0, 1.0), center, float(fov_deg))


def extract_stereo_viewports(pair, n0=8, fov_deg=90.0, side=None):
    """Render the left/right viewport pair for every sampled viewpoint."""
    if not isinstance(pair, ErpStereoPair):
        raise InvalidArgumentError("expected an ErpStereoPair")
    return [
        (render_viewport(pair.left, vp, fov_deg, side), render_viewport(pair.right, vp, fov_deg, side))
        for vp in sample_viewpoints(n0)
    ]

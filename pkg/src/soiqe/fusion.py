"""Content- and location-weighted fusion of per-viewport qualities."""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class LaplaceLatitudeModel:
    """Laplace density over viewport centre latitude, in degrees."""

    mu: float = 0.0
    b: float = 15.0

    def __post_init__(self):
        if not self.b > 0:
            raise InvalidArgumentError(f"Laplace scale must be positive, got {self.b!r}")

    def density(self, latitude_deg):
        return math.exp(-abs(latitude_deg - self.mu) / self.b) / (2.0 * self.b)


@dataclass(frozen=True)
class FusionRecord:
    index: int
    latitude_deg: float
    longitude_deg: float
    q: float
    cw: float
    lw: float
    w: float


def spatial_information(img):
    """Population std of the Sobel gradient magnitude (mirror boundaries)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or min(img.shape) < 3:
        raise InvalidArgumentError(f"spatial information needs an image of at least 3x3, got {img.shape}")
    gx = ndimage.sobel(img, axis=1, mode="reflect")
    gy = ndimage.sobel(img, axis=0, mode="reflect")
    return float(np.hypot(gx, gy).std())


def content_weight(dis_left, dis_right, w_left, w_right):
    """Rivalry-weighted spatial information of a distorted stereo viewport."""
    if w_left < 0 or w_right < 0:
        raise InvalidArgumentError("dominance weights must be non-negative")
    return w_left * spatial_information(dis_left) + w_right * spatial_information(dis_right)


def location_weight(center_latitude, model=LaplaceLatitudeModel()):
    if not -90.0 <= center_latitude <= 90.0:
        raise InvalidArgumentError(f"latitude {center_latitude} outside [-90, 90]")
    return model.density(center_latitude)


def fusion_weights(cw, lw):
    """Normalised ``cw * lw``; uniform when every product is zero."""
    prod = np.asarray(cw, dtype=np.float64) * np.asarray(lw, dtype=np.float64)
    if prod.size == 0:
        raise InvalidArgumentError("cannot fuse an empty set of viewports")
    total = prod.sum()
    if total == 0.0:
        return np.full(prod.size, 1.0 / prod.size)
    return prod / total


def fuse(records):
    """Weighted mean of per-viewport qualities.

    ``records`` is a sequence of ``(q, cw, lw)`` triples.
    """
    records = list(records)
    if not records:
        raise InvalidArgumentError("cannot fuse an empty set of viewports")
    q, cw, lw = (np.array(col, dtype=np.float64) for col in zip(*records))
    w = fusion_weights(cw, lw)
    return float(np.sum(w * q))


def write_fusion_csv(records, path):
    """Write per-viewport :class:`FusionRecord` rows: index, lat, lon, q, cw, lw, w."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["index", "lat", "lon", "q", "cw", "lw", "w"])
        for r in records:
            out.writerow([r.index, repr(r.latitude_deg), repr(r.longitude_deg),
                          repr(r.q), repr(r.cw), repr(r.lw), repr(r.w)])

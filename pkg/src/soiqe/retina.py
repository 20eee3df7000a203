"""Luma conversion, automatic downsampling and the LoG + tanh front end."""

import math

import numpy as np

from . import kernels
from .errors import InvalidArgumentError

LOG_SIGMA = 1.5
_BT601 = (0.299, 0.587, 0.114)


def to_luma(rgb, width, height):
    """Interleaved 8-bit RGB triplets to a ``(height, width)`` luma grid in [0, 1]."""
    buf = np.frombuffer(bytes(rgb), dtype=np.uint8) if isinstance(rgb, (bytes, bytearray, memoryview)) \
        else np.asarray(rgb, dtype=np.uint8).ravel()
    if buf.size != 3 * width * height:
        raise InvalidArgumentError(
            f"RGB buffer holds {buf.size} bytes, expected {3 * width * height} for {width}x{height}")
    px = buf.reshape(height, width, 3).astype(np.float64)
    return (_BT601[0] * px[..., 0] + _BT601[1] * px[..., 1] + _BT601[2] * px[..., 2]) / 255.0


def downsample_factor(width, height):
    return max(1, int(math.floor(min(width, height) / 256.0 + 0.5)))


def auto_downsample(img):
    """Box-filter and decimate so the short side lands near 256 pixels.

    Uses the factor ``max(1, round(min(h, w) / 256))``; trailing rows and
    columns that do not fill a whole ``F x F`` cell are dropped.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    f = downsample_factor(w, h)
    if f == 1:
        return img
    hh, ww = h // f, w // f
    return img[:hh * f, :ww * f].reshape(hh, f, ww, f).mean(axis=(1, 3))


def log_kernel(sigma=LOG_SIGMA):
    """Zero-sum Laplacian-of-Gaussian kernel with support ``2*ceil(3*sigma)+1``."""
    if not sigma > 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma!r}")
    half = int(math.ceil(3.0 * sigma))
    ax = np.arange(-half, half + 1, dtype=np.float64)
    rr = ax[None, :] ** 2 + ax[:, None] ** 2
    s2 = sigma * sigma
    k = (rr - 2.0 * s2) / (2.0 * math.pi * s2 * s2 * s2) * np.exp(-rr / (2.0 * s2))
    return k - k.mean()


_LOG = log_kernel(LOG_SIGMA)


def preprocess(img, sigma=LOG_SIGMA):
    """``tanh(2*pi * (img * LoG))`` with symmetric boundary handling."""
    img = np.asarray(img, dtype=np.float64)
    kernel = _LOG if sigma == LOG_SIGMA else log_kernel(sigma)
    return np.tanh(2.0 * math.pi * kernels.correlate_symmetric(img, kernel))

"""Deterministic procedural panoramas and distortions for tests and demos."""

import io

import numpy as np
from PIL import Image
from scipy import ndimage


def make_scene(seed, width=1024, height=512):
    """Textured luma panorama in [0.05, 0.95].

    A smooth horizon-like gradient, a few band-limited sinusoid layers and a
    scatter of flat-shaded discs give both edges and fine texture.
    """
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    lon = x / width * 2.0 * np.pi
    lat = (0.5 - (y + 0.5) / height) * np.pi
    img = 0.4 * np.tanh(3.0 * lat + rng.uniform(-0.5, 0.5))
    for _ in range(6):
        f = rng.integers(3, 40)
        g = rng.uniform(2.0, 30.0)
        phase = rng.uniform(0, 2 * np.pi, size=2)
        img += rng.uniform(0.05, 0.2) * np.sin(f * lon + phase[0]) * np.cos(g * lat + phase[1])
    for _ in range(25):
        cx, cy = rng.uniform(0, width), rng.uniform(0.1 * height, 0.9 * height)
        r = rng.uniform(0.01, 0.06) * width
        d2 = np.minimum(np.abs(x - cx), width - np.abs(x - cx)) ** 2 + (y - cy) ** 2
        img = np.where(d2 < r * r, rng.uniform(-0.6, 0.6), img)
    img += 0.03 * rng.standard_normal((height, width))
    img -= img.min()
    img /= img.max()
    return 0.05 + 0.9 * img


def stereo_views(scene, disparity=4):
    """Left/right views with a uniform horizontal disparity in pixels."""
    return scene, np.roll(scene, -int(disparity), axis=1)


def gaussian_blur(img, sigma):
    if sigma <= 0:
        return np.array(img, dtype=np.float64)
    return ndimage.gaussian_filter(np.asarray(img, dtype=np.float64), sigma, mode=("nearest", "wrap"))


def white_noise(img, std, seed=0):
    rng = np.random.default_rng(seed)
    img = np.asarray(img, dtype=np.float64)
    return np.clip(img + std * rng.standard_normal(img.shape), 0.0, 1.0)


def jpeg(img, quality):
    px = np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(px, mode="L").save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    with Image.open(buf) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def quantize(img, levels):
    img = np.asarray(img, dtype=np.float64)
    return np.round(img * (levels - 1)) / (levels - 1)


def random_distortion(img, rng):
    """Apply one randomly chosen distortion with a random non-trivial strength."""
    kind = rng.integers(4)
    if kind == 0:
        return gaussian_blur(img, rng.uniform(0.8, 4.0))
    if kind == 1:
        return white_noise(img, rng.uniform(0.02, 0.15), seed=int(rng.integers(1 << 31)))
    if kind == 2:
        return jpeg(img, int(rng.integers(5, 40)))
    return quantize(img, int(rng.integers(4, 16)))

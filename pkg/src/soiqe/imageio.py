"""Reading and writing 8-bit images as luma grids."""

import numpy as np
from PIL import Image

from .retina import to_luma


def load_luma(path):
    """Read a grayscale or colour image and return its luma in [0, 1]."""
    with Image.open(path) as im:
        im.load()
        if im.mode == "L":
            return np.asarray(im, dtype=np.float64) / 255.0
        rgb = im.convert("RGB")
        return to_luma(rgb.tobytes(), rgb.width, rgb.height)


def save_luma(luma, path):
    """Write a [0, 1] luma grid as an 8-bit grayscale PNG."""
    px = np.clip(np.rint(np.asarray(luma) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(px, mode="L").save(path)

"""Pure-numpy implementations of the hot kernels."""

import numpy as np

NAME = "numpy"


def bilinear_sample(img, u, v):
    """Sample ``img`` at fractional pixel coordinates.

    ``u`` is the column coordinate and wraps around the image width, ``v`` is
    the row coordinate and is clamped to the first/last row.
    """
    h, w = img.shape
    u = np.mod(u, w)
    v = np.clip(v, 0.0, h - 1.0)
    u0 = np.floor(u)
    du = u - u0
    i0 = u0.astype(np.intp) % w
    i1 = (i0 + 1) % w
    v0 = np.minimum(np.floor(v), h - 2.0)
    dv = v - v0
    j0 = v0.astype(np.intp)
    j1 = j0 + 1
    top = img[j0, i0] * (1.0 - du) + img[j0, i1] * du
    bottom = img[j1, i0] * (1.0 - du) + img[j1, i1] * du
    return top * (1.0 - dv) + bottom * dv


def correlate_symmetric(img, kernel):
    """2-D correlation with half-sample symmetric padding, output same size."""
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    padded = np.pad(img, ((ph, ph), (pw, pw)), mode="symmetric")
    h, w = img.shape
    out = np.zeros((h, w), dtype=np.float64)
    for a in range(kh):
        for b in range(kw):
            k = kernel[a, b]
            if k != 0.0:
                out += k * padded[a:a + h, b:b + w]
    return out


def _activation(x, use_tanh):
    return np.tanh(x) if use_tanh else x


def _objective_from_drive(patches, drive, r, sigma2, alpha, use_tanh):
    res = patches - _activation(drive, use_tanh)
    return (res * res).sum(axis=1) / sigma2 + alpha * np.log1p(r * r).sum(axis=1)


def encode_batch(patches, basis, sigma2, alpha, steps, lr, max_halvings, use_tanh):
    # overflow shows up as a non-finite objective, which the caller reports
    with np.errstate(over="ignore", invalid="ignore"):
        return _encode_batch(patches, basis, sigma2, alpha, steps, lr, max_halvings, use_tanh)


def _encode_batch(patches, basis, sigma2, alpha, steps, lr, max_halvings, use_tanh):
    """Backtracking gradient descent on the coding objective, one row per patch.

    The drive ``r @ basis`` is updated incrementally so trial steps cost O(D)
    rather than O(K*D). Returns ``(r, objective, history)`` where ``history``
    has shape ``(steps + 1, n_patches)`` and holds the objective after every
    step.
    """
    n = patches.shape[0]
    k = basis.shape[0]
    r = np.zeros((n, k))
    drive = np.zeros_like(patches, dtype=np.float64)
    obj = _objective_from_drive(patches, drive, r, sigma2, alpha, use_tanh)
    history = np.empty((steps + 1, n))
    history[0] = obj
    for step in range(steps):
        pred = _activation(drive, use_tanh)
        res = patches - pred
        if use_tanh:
            res = res * (1.0 - pred * pred)
        grad = (-2.0 / sigma2) * (res @ basis.T) + 2.0 * alpha * r / (1.0 + r * r)
        gdrive = grad @ basis
        rate = np.full(n, float(lr))
        pending = np.isfinite(obj)
        for _ in range(max_halvings + 1):
            idx = np.flatnonzero(pending)
            if idx.size == 0:
                break
            t_r = r[idx] - rate[idx, None] * grad[idx]
            t_drive = drive[idx] - rate[idx, None] * gdrive[idx]
            t_obj = _objective_from_drive(patches[idx], t_drive, t_r, sigma2, alpha, use_tanh)
            ok = t_obj <= obj[idx]
            acc = idx[ok]
            r[acc] = t_r[ok]
            drive[acc] = t_drive[ok]
            obj[acc] = t_obj[ok]
            pending[acc] = False
            rate[idx[~ok]] *= 0.5
        history[step + 1] = obj
    return r, obj, history

"""numba-compiled implementations of the hot kernels.

Signatures and semantics mirror :mod:`soiqe.kernels._numpy`. Kernels release
the GIL so callers can parallelise across images with ordinary threads.
"""

import math

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def _bilinear_sample_flat(img, u, v, out):
    h, w = img.shape
    for n in range(u.size):
        uu = u[n] % w
        if uu < 0.0:
            uu += w
        vv = min(max(v[n], 0.0), h - 1.0)
        u0 = math.floor(uu)
        du = uu - u0
        i0 = int(u0) % w
        i1 = (i0 + 1) % w
        v0 = min(math.floor(vv), h - 2.0)
        dv = vv - v0
        j0 = int(v0)
        j1 = j0 + 1
        top = img[j0, i0] * (1.0 - du) + img[j0, i1] * du
        bottom = img[j1, i0] * (1.0 - du) + img[j1, i1] * du
        out[n] = top * (1.0 - dv) + bottom * dv


def bilinear_sample(img, u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    out = np.empty(u.size)
    _bilinear_sample_flat(np.ascontiguousarray(img, dtype=np.float64),
                          np.ascontiguousarray(u).ravel(),
                          np.ascontiguousarray(v).ravel(), out)
    return out.reshape(u.shape)


@njit(cache=True, nogil=True)
def _reflect(i, n):
    # half-sample symmetric index, valid for |overhang| <= n
    if i < 0:
        return -i - 1
    if i >= n:
        return 2 * n - i - 1
    return i


@njit(cache=True, nogil=True)
def _correlate_symmetric(img, kernel, out):
    h, w = img.shape
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for a in range(kh):
                yy = _reflect(y + a - ph, h)
                for b in range(kw):
                    acc += kernel[a, b] * img[yy, _reflect(x + b - pw, w)]
            out[y, x] = acc


def correlate_symmetric(img, kernel):
    img = np.ascontiguousarray(img, dtype=np.float64)
    out = np.empty_like(img)
    _correlate_symmetric(img, np.ascontiguousarray(kernel, dtype=np.float64), out)
    return out


@njit(cache=True, nogil=True)
def _objective(p, drive, r, sigma2, alpha, use_tanh):
    data = 0.0
    for t in range(p.size):
        f = math.tanh(drive[t]) if use_tanh else drive[t]
        e = p[t] - f
        data += e * e
    reg = 0.0
    for j in range(r.size):
        reg += math.log1p(r[j] * r[j])
    return data / sigma2 + alpha * reg


@njit(cache=True, nogil=True, fastmath={"reassoc", "contract"})
def _encode_batch(patches, basis, sigma2, alpha, steps, lr, max_halvings,
                  use_tanh, r_out, history):
    n, d = patches.shape
    k = basis.shape[0]
    r = np.empty(k)
    t_r = np.empty(k)
    grad = np.empty(k)
    drive = np.empty(d)
    t_drive = np.empty(d)
    gdrive = np.empty(d)
    res = np.empty(d)
    for i in range(n):
        p = patches[i]
        r[:] = 0.0
        drive[:] = 0.0
        obj = _objective(p, drive, r, sigma2, alpha, use_tanh)
        history[0, i] = obj
        for s in range(steps):
            for t in range(d):
                f = math.tanh(drive[t]) if use_tanh else drive[t]
                res[t] = p[t] - f
                if use_tanh:
                    res[t] *= 1.0 - f * f
            gdrive[:] = 0.0
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    acc += basis[j, t] * res[t]
                g = (-2.0 / sigma2) * acc + 2.0 * alpha * r[j] / (1.0 + r[j] * r[j])
                grad[j] = g
                for t in range(d):
                    gdrive[t] += g * basis[j, t]
            rate = lr
            if math.isfinite(obj):
                for _ in range(max_halvings + 1):
                    for j in range(k):
                        t_r[j] = r[j] - rate * grad[j]
                    for t in range(d):
                        t_drive[t] = drive[t] - rate * gdrive[t]
                    t_obj = _objective(p, t_drive, t_r, sigma2, alpha, use_tanh)
                    if t_obj <= obj:
                        r[:] = t_r
                        drive[:] = t_drive
                        obj = t_obj
                        break
                    rate *= 0.5
            history[s + 1, i] = obj
        r_out[i, :] = r


def encode_batch(patches, basis, sigma2, alpha, steps, lr, max_halvings, use_tanh):
    patches = np.ascontiguousarray(patches, dtype=np.float64)
    basis = np.ascontiguousarray(basis, dtype=np.float64)
    n = patches.shape[0]
    r = np.empty((n, basis.shape[0]))
    history = np.empty((steps + 1, n))
    _encode_batch(patches, basis, float(sigma2), float(alpha), int(steps), float(lr),
                  int(max_halvings), bool(use_tanh), r, history)
    return r, history[-1].copy(), history

import subprocess
import sys

import numpy as np
import pytest

from soiqe import kernels
from soiqe.retina import log_kernel

BACKENDS = kernels.available_backends()
needs_numba = pytest.mark.skipif("numba" not in BACKENDS, reason="numba not importable")


def test_numpy_is_always_available():
    assert "numpy" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_bilinear_hand_values(name):
    img = np.array([[0.0, 1.0], [2.0, 3.0]])
    k = BACKENDS[name]
    out = k.bilinear_sample(img, np.array([0.5, 0.0, 1.5, 0.25]), np.array([0.5, 0.0, 0.0, 2.0]))
    # u wraps (1.5 mixes columns 1 and 0), v clamps (2.0 -> last row)
    np.testing.assert_allclose(out, [1.5, 0.0, 0.5, 2.25])


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_correlate_matches_scipy(name, rng):
    from scipy import ndimage
    img = rng.random((23, 31))
    ker = log_kernel(1.5)
    np.testing.assert_allclose(BACKENDS[name].correlate_symmetric(img, ker),
                               ndimage.correlate(img, ker, mode="reflect"), atol=1e-12)


@needs_numba
def test_backends_agree_on_sampling(rng):
    img = rng.random((40, 80))
    u = rng.uniform(-100, 200, size=(17, 19))
    v = rng.uniform(-5, 45, size=(17, 19))
    np.testing.assert_allclose(BACKENDS["numba"].bilinear_sample(img, u, v),
                               BACKENDS["numpy"].bilinear_sample(img, u, v), atol=1e-12)


@needs_numba
@pytest.mark.parametrize("use_tanh", [False, True])
def test_backends_agree_on_encoding(rng, use_tanh):
    basis = rng.normal(scale=0.2, size=(16, 64))
    patches = rng.normal(size=(200, 64))
    args = (patches, basis, 1.0, 0.05, 50, 0.1, 10, use_tanh)
    r_a, obj_a, hist_a = BACKENDS["numba"].encode_batch(*args)
    r_b, obj_b, hist_b = BACKENDS["numpy"].encode_batch(*args)
    np.testing.assert_allclose(r_a, r_b, atol=1e-8)
    np.testing.assert_allclose(obj_a, obj_b, rtol=1e-10)
    np.testing.assert_allclose(hist_a, hist_b, rtol=1e-10)


@needs_numba
def test_numba_encoding_is_repeatable(rng):
    basis = rng.normal(scale=0.2, size=(8, 16))
    patches = rng.normal(size=(30, 16))
    k = BACKENDS["numba"]
    a = k.encode_batch(patches, basis, 1.0, 0.05, 20, 0.1, 10, False)
    b = k.encode_batch(patches, basis, 1.0, 0.05, 20, 0.1, 10, False)
    assert a[0].tobytes() == b[0].tobytes()


@pytest.mark.parametrize("name", ["numpy", "numba"])
def test_env_flag_selects_backend(name):
    if name not in BACKENDS:
        pytest.skip("backend not importable")
    code = "from soiqe import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"SOIQE_BACKEND": name, "PATH": ""}, check=True)
    assert out.stdout.strip() == name


def test_unknown_backend_is_rejected():
    out = subprocess.run([sys.executable, "-c", "import soiqe.kernels"], capture_output=True,
                         text=True, env={"SOIQE_BACKEND": "cuda", "PATH": ""})
    assert out.returncode != 0
    assert "SOIQE_BACKEND" in out.stderr

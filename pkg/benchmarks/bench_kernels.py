"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once untimed (numba compilation) and then ``--repeat``
times; the best wall time is reported with the max abs difference between
the two backends' outputs.
"""

import argparse
import time

import numpy as np

from soiqe.kernels import available_backends
from soiqe.retina import log_kernel


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    img = rng.random((512, 1024))
    u = rng.uniform(0, 1024, size=(256, 256))
    v = rng.uniform(0, 512, size=(256, 256))
    view = rng.random((256, 256))
    ker = log_kernel(1.5)
    basis = rng.normal(scale=0.1, size=(128, 64))
    patches = rng.normal(scale=0.3, size=(4096, 64))
    return {
        "bilinear_sample 256x256": (lambda k: k.bilinear_sample(img, u, v)),
        "correlate_symmetric 256x256, 11x11": (lambda k: k.correlate_symmetric(view, ker)),
        "encode_batch 4096 x (K=128, L=8)":
            (lambda k: k.encode_batch(patches, basis, 1.0, 0.05, 50, 0.1, 10, False)[0]),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = available_backends()
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s}" + "".join(f"{name:>12s}" for name in backends) + f"{'max diff':>12s}")
    for label, run in cases(rng).items():
        outs = {name: run(k) for name, k in backends.items()}
        times = {name: best_time(lambda k=k: run(k), args.repeat) for name, k in backends.items()}
        ref = outs["numpy"]
        diff = max(float(np.max(np.abs(o - ref))) for o in outs.values())
        print(f"{label:40s}" + "".join(f"{times[n] * 1e3:10.1f}ms" for n in backends) + f"{diff:12.1e}")


if __name__ == "__main__":
    main()

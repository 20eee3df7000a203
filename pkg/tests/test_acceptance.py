"""Acceptance criteria 1-10; each test records one PASS/FAIL/SKIP line.

The lines are printed in the terminal summary of every pytest run.
"""

import json
import os
import time

import numpy as np
import pytest

from soiqe.cli import main
from soiqe.coding import (Dictionary, PcHyperparams, batch_objective, encode, grad_basis, grad_r,
                          objective)
from soiqe.harness import fit_logistic, plcc, read_manifest, rmse, run_benchmark, srocc
from soiqe.pipeline import PipelineConfig, prepare_stereo, prepare_view, score_pair, score_prepared
from soiqe.rivalry import block_scores
from soiqe.coding import PatchCodes
from soiqe.sphere import ErpImage, ErpStereoPair, sample_viewpoints
from soiqe.synthetic import (gaussian_blur, make_scene, random_distortion, stereo_views,
                             white_noise)

from . import oracles
from .conftest import ACCEPTANCE_LINES, SMOKE_MANIFEST, TOY_DICT
from .test_sphere import as_set, exact_viewpoints


def report(number, ok, detail):
    status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
    line = f"criterion {number:2d}: {status} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pair(left, right):
    return ErpStereoPair(ErpImage(left), ErpImage(right))


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


# 1 ---------------------------------------------------------------------------

def test_c01_gradients_match_finite_differences():
    start = time.perf_counter()
    h = 1e-5
    worst_r = worst_u = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        hp = PcHyperparams(alpha=rng.uniform(0.01, 0.5), lam=rng.uniform(1e-5, 1e-2))
        basis = rng.normal(scale=0.2, size=(16, 64))
        patch, r = rng.normal(size=64), rng.normal(size=16)
        fd = np.empty(16)
        for j in range(16):
            e = np.zeros(16)
            e[j] = h
            fd[j] = (objective(patch, r + e, basis, hp) - objective(patch, r - e, basis, hp)) / (2 * h)
        worst_r = max(worst_r, rel_err(grad_r(patch, r, basis, hp), fd))

        patches, codes = rng.normal(size=(3, 64)), rng.normal(size=(3, 16))
        fd_u = np.empty_like(basis)
        for idx in np.ndindex(basis.shape):
            old = basis[idx]
            basis[idx] = old + h
            up = batch_objective(patches, codes, basis, hp)
            basis[idx] = old - h
            down = batch_objective(patches, codes, basis, hp)
            basis[idx] = old
            fd_u[idx] = (up - down) / (2 * h)
        worst_u = max(worst_u, rel_err(grad_basis(patches, codes, basis, hp), fd_u))
    elapsed = time.perf_counter() - start
    ok = worst_r < 1e-4 and worst_u < 1e-4 and elapsed < 10.0
    report(1, ok, f"100 instances, max rel err grad_r {worst_r:.1e}, grad_U {worst_u:.1e}, "
                  f"{elapsed:.1f} s")
    assert ok


# 2 ---------------------------------------------------------------------------

def test_c02_sparse_coding_identity():
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.normal(size=(64, 16)))
    d = Dictionary(8, q.T)
    hp = PcHyperparams(alpha=1e-6)
    worst = 0.0
    for j in range(16):
        res = encode(d.basis64[j], d, hp)
        target = np.zeros(16)
        target[j] = 1.0
        worst = max(worst, np.abs(res.r - target).max())
    zero = np.abs(encode(np.zeros(64), d, hp).r).max()
    ok = worst < 1e-3 and zero < 1e-6
    report(2, ok, f"max coefficient error {worst:.1e}, zero patch |r|inf {zero:.1e}")
    assert ok


# 3 ---------------------------------------------------------------------------

def test_c03_rivalry_normalisations():
    rng = np.random.default_rng(3)
    n, k, d = 1000, 16, 64

    def codes(r, err):
        return PatchCodes(r, np.zeros_like(err), err, np.zeros(len(r)))

    ref_l, ref_r = rng.normal(size=(n, k)), rng.normal(size=(n, k))
    dis_l, dis_r = rng.normal(size=(n, k)), rng.normal(size=(n, k))
    same = rng.random(n) < 0.5
    dis_l[same] = ref_l[same]
    # a sprinkle of degenerate inputs for the 0/0 rules
    err_l, err_r = rng.normal(size=(n, d)), rng.normal(size=(n, d))
    err_l[:20] = 0.0
    err_r[:20] = 0.0
    dis_l[:10] = dis_r[:10] = 0.0
    ref_l[:10] = 0.0
    left, right = block_scores((codes(ref_l, np.zeros((n, d))), codes(dis_l, err_l)),
                               (codes(ref_r, np.zeros((n, d))), codes(dis_r, err_r)),
                               rng.random(k))
    norm_ok = True
    for a, b in ((left.ew, right.ew), (left.v_hat, right.v_hat), (left.rr_hat, right.rr_hat)):
        norm_ok &= bool(np.all(np.abs(a + b - 1.0) <= 1e-12))
        norm_ok &= bool(np.all((a >= 0) & (a <= 1) & (b >= 0) & (b <= 1)))
    identical = np.all(dis_l == ref_l, axis=1)
    iff_ok = bool(np.all((left.s == 1.0) == identical)) and bool(np.all(left.s <= 1.0))
    positive = bool(np.all(left.s > 0) and np.all(right.s > 0))
    detail = (f"normalisations {'ok' if norm_ok else 'broken'}; s=1 iff identical "
              f"{'ok' if iff_ok else 'broken'}; min s = {min(left.s.min(), right.s.min()):.3f}")
    if not positive:
        detail += " (s > 0 fails: signed codes make s range over (-1, 1])"
    report(3, norm_ok and iff_ok and positive, detail)
    assert norm_ok and iff_ok
    if not positive:
        pytest.xfail("s in (0, 1] cannot hold for signed coefficients; see decisions ledger")


# 4 ---------------------------------------------------------------------------

def test_c04_view_swap_invariance(toy_dictionary):
    cfg = PipelineConfig()
    diffs = []
    for seed in range(5):
        ref_l, ref_r = stereo_views(make_scene(40 + seed, 512, 256), disparity=3)
        dis_l = gaussian_blur(ref_l, 1.0 + seed * 0.5)
        dis_r = white_noise(ref_r, 0.03 * (seed + 1), seed=seed)
        a = score_pair(pair(ref_l, ref_r), pair(dis_l, dis_r), toy_dictionary, cfg).score
        b = score_pair(pair(ref_r, ref_l), pair(dis_r, dis_l), toy_dictionary, cfg).score
        diffs.append(abs(a - b))
    ok = max(diffs) == 0.0
    report(4, ok, f"5 scenes at 512x256, max |score - swapped| = {max(diffs):.1e}")
    assert ok


# 5 ---------------------------------------------------------------------------

BLUR_LEVELS = [0.5, 1.0, 1.5, 2.0, 3.0]
NOISE_LEVELS = [0.01, 0.02, 0.05, 0.1, 0.2]


@pytest.mark.slow
def test_c05_monotonic_ladders(toy_dictionary):
    cfg = PipelineConfig()
    start = time.perf_counter()
    results = []
    for seed in (1, 2, 3):
        left, right = stereo_views(make_scene(seed), disparity=4)
        ref = prepare_stereo(pair(left, right), toy_dictionary, cfg)
        for name, levels, apply in (
                ("blur", BLUR_LEVELS, lambda img, x: gaussian_blur(img, x)),
                ("noise", NOISE_LEVELS, lambda img, x: white_noise(img, x, seed=7))):
            scores = []
            for x in levels:
                dis = prepare_stereo(pair(apply(left, x), apply(right, x)), toy_dictionary, cfg)
                scores.append(score_prepared(ref, dis, toy_dictionary, cfg).score)
            results.append((seed, name, srocc(levels, -np.array(scores))))
    elapsed = time.perf_counter() - start
    ok = all(r[2] == 1.0 for r in results) and elapsed < 300.0
    worst = min(r[2] for r in results)
    report(5, ok, f"3 scenes x (blur, noise) at 1024x512, min SROCC {worst:.3f}, {elapsed:.0f} s")
    assert ok


# 6 ---------------------------------------------------------------------------

def test_c06_perfect_reference_ceiling(toy_dictionary):
    cfg = PipelineConfig()
    n_blocks = (cfg.side_for(512) // toy_dictionary.patch_side) ** 2
    ceiling = n_blocks / 4
    rng = np.random.default_rng(6)
    lines, ok = [], True
    for disparity in (0, 4):
        left, right = stereo_views(make_scene(60 + disparity, 512, 256), disparity)
        ref_pair = pair(left, right)
        ref = prepare_stereo(ref_pair, toy_dictionary, cfg)
        perfect = score_prepared(ref, ref, toy_dictionary, cfg).score
        best = -np.inf
        for i in range(20):
            dl = random_distortion(left, rng)
            # half of the variants distort only one view
            dr = random_distortion(right, rng) if i % 2 == 0 else right
            dis = (prepare_view(dl, toy_dictionary, cfg), prepare_view(dr, toy_dictionary, cfg))
            best = max(best, score_prepared(ref, dis, toy_dictionary, cfg).score)
        ok &= perfect > best
        if disparity == 0:
            ok &= abs(perfect - ceiling) <= 1e-12 * ceiling
        lines.append(f"disparity {disparity}: perfect {perfect:.4f} vs best distorted {best:.4f}")
    report(6, ok, f"analytic N/4 = {ceiling:g}; " + "; ".join(lines))
    assert ok


# 7 ---------------------------------------------------------------------------

def test_c07_sampling_formula():
    mismatched = [n0 for n0 in range(4, 17) if as_set(sample_viewpoints(n0)) != exact_viewpoints(n0)
                  or len(sample_viewpoints(n0)) != len(exact_viewpoints(n0))]
    n8 = len(sample_viewpoints(8))
    ok = not mismatched and n8 == 20
    report(7, ok, f"n0 4..16 exact set equality ({len(mismatched)} mismatches), n0=8 -> {n8} points")
    assert ok


# 8 ---------------------------------------------------------------------------

def test_c08_harness_correctness():
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(800 + seed)
        n = int(rng.integers(5, 60))
        x = rng.normal(size=n)
        y = rng.normal(size=n) + x * rng.uniform(-1, 1)
        if seed % 5 == 0:
            x = np.round(x, 1)  # ties
        xs, ys = list(x), list(y)
        worst = max(worst, abs(srocc(x, y) - oracles.spearman(xs, ys)),
                    abs(plcc(x, y) - oracles.pearson(xs, ys)),
                    abs(rmse(x, y) - oracles.rmse(xs, ys)))
    beta = (3.0, 1.5, 0.2, 0.1, 2.5)
    xs = np.linspace(-2.0, 2.0, 60)
    ys = np.array([oracles.logistic5(v, beta) for v in xs])
    fit_rmse = rmse(fit_logistic(xs, ys).params(xs), ys)
    rng = np.random.default_rng(88)
    x, y = rng.normal(size=40), rng.normal(size=40)
    invariant = srocc(np.exp(x), y) == srocc(x, y) == srocc(x ** 3, y)
    ok = worst <= 1e-10 and fit_rmse < 1e-6 and invariant
    report(8, ok, f"max |metric - brute force| {worst:.1e} over 50 vectors, logistic RMSE "
                  f"{fit_rmse:.1e}, rank invariance {'exact' if invariant else 'broken'}")
    assert ok


# 9 ---------------------------------------------------------------------------

def test_c09_solid_reproduction():
    manifest = os.environ.get("SOIQE_SOLID_MANIFEST")
    dict_path = os.environ.get("SOIQE_SOLID_DICT")
    if not (manifest and dict_path and os.path.isfile(manifest) and os.path.isfile(dict_path)):
        report(9, "SKIP", "set SOIQE_SOLID_MANIFEST and SOIQE_SOLID_DICT to run on SOLID")
        pytest.skip("SOLID data not supplied")
    threads = int(os.environ.get("SOIQE_THREADS", os.cpu_count() or 1))
    out = run_benchmark(read_manifest(manifest), Dictionary.load(dict_path),
                        PipelineConfig(threads=threads))
    r = out.report
    ok = not r.degenerate and r.plcc >= 0.90 and r.srocc >= 0.89
    report(9, ok, f"SOLID n={r.n}: PLCC {r.plcc}, SROCC {r.srocc}, RMSE {r.rmse}, OR {r.or_ratio} "
                  f"(target 0.927 / 0.924 / 0.383 / 0.022)")
    assert ok


# 10 --------------------------------------------------------------------------

def _numbers(obj):
    if isinstance(obj, dict):
        return [v for k in sorted(obj) for v in _numbers(obj[k])]
    if isinstance(obj, list):
        return [v for item in obj for v in _numbers(item)]
    return [obj] if isinstance(obj, float) else []


@pytest.mark.slow
def test_c10_determinism(tmp_path):
    def run(name, threads):
        out = tmp_path / name
        code = main(["benchmark", "--manifest", SMOKE_MANIFEST, "--out-dir", str(out),
                     "--dict", TOY_DICT, "--threads", str(threads)])
        assert code == 0
        return (out / "report.json").read_bytes(), (out / "items.csv").read_bytes()

    a, b, c = run("a", 1), run("b", 1), run("c", 4)
    identical = a == b
    ra, rc = json.loads(a[0]), json.loads(c[0])
    num_a, num_c = _numbers(ra), _numbers(rc)
    items_a = [float(x) for line in a[1].decode().splitlines()[1:] for x in line.split(",")[1:5]]
    items_c = [float(x) for line in c[1].decode().splitlines()[1:] for x in line.split(",")[1:5]]
    diff = max(np.max(np.abs(np.subtract(num_a, num_c))), np.max(np.abs(np.subtract(items_a, items_c))))
    ok = identical and len(num_a) == len(num_c) and diff <= 1e-9
    report(10, ok, f"single-thread runs byte-identical: {identical}; 4 threads max diff {diff:.1e}")
    assert ok

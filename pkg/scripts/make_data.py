"""Regenerate the bundled corpus, toy dictionary and smoke manifest under data/.

    python scripts/make_data.py [--skip-dict]
"""

import argparse
import csv
import os

from soiqe import synthetic
from soiqe.coding import PcHyperparams, train_dictionary, training_patches
from soiqe.imageio import load_luma, save_luma
from soiqe.retina import auto_downsample, preprocess

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "data")


def make_corpus(out_dir, n=20, size=128):
    os.makedirs(out_dir, exist_ok=True)
    for i in range(n):
        save_luma(synthetic.make_scene(1000 + i, size, size), os.path.join(out_dir, f"img_{i:02d}.png"))


def make_dictionary(corpus_dir, path, side=8, n_basis=128, seed=7):
    names = sorted(f for f in os.listdir(corpus_dir) if f.endswith(".png"))
    images = [preprocess(auto_downsample(load_luma(os.path.join(corpus_dir, f)))) for f in names]
    hp = PcHyperparams(seed=seed)
    d = train_dictionary(training_patches(images, side, seed), side, n_basis, hp, corpus_id="bundled-corpus")
    d.save(path)
    return d


def make_smoke(out_dir, width=256, height=128):
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for s, seed in enumerate((11, 12)):
        left, right = synthetic.stereo_views(synthetic.make_scene(seed, width, height), disparity=2)
        ref = (f"s{s}_ref_L.png", f"s{s}_ref_R.png")
        save_luma(left, os.path.join(out_dir, ref[0]))
        save_luma(right, os.path.join(out_dir, ref[1]))
        variants = [
            ("blur1", synthetic.gaussian_blur(left, 1.0), synthetic.gaussian_blur(right, 1.0), 3.6),
            ("blur3", synthetic.gaussian_blur(left, 3.0), synthetic.gaussian_blur(right, 3.0), 1.8),
            ("noise05", synthetic.white_noise(left, 0.05, 1), synthetic.white_noise(right, 0.05, 2), 3.2),
            ("noise15", synthetic.white_noise(left, 0.15, 3), synthetic.white_noise(right, 0.15, 4), 1.5),
            ("jpeg10", synthetic.jpeg(left, 10), synthetic.jpeg(right, 10), 2.4),
            ("asym_blur", synthetic.gaussian_blur(left, 2.0), right, 3.9),
        ]
        for tag, dl, dr, mos in variants:
            names = (f"s{s}_{tag}_L.png", f"s{s}_{tag}_R.png")
            save_luma(dl, os.path.join(out_dir, names[0]))
            save_luma(dr, os.path.join(out_dir, names[1]))
            rows.append([f"s{s}_{tag}", *ref, *names, mos, 0.4, tag.split("_")[0].rstrip("0123456789")])
    with open(os.path.join(out_dir, "manifest.csv"), "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", "ref_left_path", "ref_right_path", "dis_left_path", "dis_right_path",
                      "mos", "mos_std", "distortion"])
        out.writerows(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skip-dict", action="store_true")
    args = ap.parse_args()
    corpus = os.path.join(ROOT, "corpus")
    make_corpus(corpus)
    make_smoke(os.path.join(ROOT, "smoke"))
    if not args.skip_dict:
        d = make_dictionary(corpus, os.path.join(ROOT, "toy_dict_k128_l8.sopc"))
        print("final epoch objective", d.meta["epoch_objective"][-1])


if __name__ == "__main__":
    main()

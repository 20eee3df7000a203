"""Command-line entry point: ``soiqe {score,benchmark,train-dict,viewports}``.

Exit codes: 0 success, 2 I/O failure, 3 validation failure, 4 missing model.
"""

import argparse
import json
import os
import sys

from .coding import Dictionary, PcHyperparams, train_dictionary, training_patches
from .errors import FormatError, InvalidArgumentError, NumericFailureError, SoiqeError
from .fusion import write_fusion_csv
from .harness import run_benchmark, write_items_csv, write_report, write_scatter_csv
from .imageio import load_luma, save_luma
from .pipeline import PipelineConfig, score_pair
from .retina import auto_downsample, preprocess
from .sphere import ErpImage, ErpStereoPair, render_viewport, sample_viewpoints

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_MODEL = 0, 2, 3, 4
DICT_ENV = "SOIQE_DICT"
IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use underscores."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{n}: expected key=value", EXIT_VALIDATION)
                key, value = (s.strip() for s in line.split("=", 1))
                out[key.replace("-", "_")] = value
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}", EXIT_IO) from None
    return out


# option name -> (type, default); shared by the commands that build a pipeline
PIPELINE_OPTIONS = {
    "n0": (int, 8),
    "fov": (float, 90.0),
    "viewport_side": (int, None),
    "c": (float, 1e-4),
    "laplace_mu": (float, 0.0),
    "laplace_b": (float, 15.0),
    "reduction": (str, "sum"),
    "threads": (int, 1),
}
CODING_OPTIONS = {
    "alpha": (float, PcHyperparams.alpha),
    "lam": (float, PcHyperparams.lam),
    "sigma2": (float, PcHyperparams.sigma2),
    "r_steps": (int, PcHyperparams.r_steps),
    "r_lr": (float, PcHyperparams.r_lr),
    "activation": (str, PcHyperparams.activation),
}
TRAIN_OPTIONS = {
    "epochs": (int, PcHyperparams.dict_epochs),
    "dict_lr": (float, PcHyperparams.dict_lr),
    "batch_size": (int, PcHyperparams.batch_size),
}


def _add_options(parser, options):
    for name, (typ, _) in options.items():
        parser.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)


def _resolve(args, file_cfg, options):
    out = {}
    for name, (typ, default) in options.items():
        value = getattr(args, name, None)
        if value is None and name in file_cfg:
            try:
                value = typ(file_cfg[name])
            except ValueError:
                raise CliError(f"config value for {name!r} is not a valid {typ.__name__}",
                               EXIT_VALIDATION) from None
        out[name] = default if value is None else value
    return out


def _file_config(args):
    return read_config_file(args.config) if getattr(args, "config", None) else {}


def _hyperparams(opts, **extra):
    return PcHyperparams(alpha=opts["alpha"], lam=opts["lam"], sigma2=opts["sigma2"],
                         r_steps=opts["r_steps"], r_lr=opts["r_lr"],
                         activation=opts["activation"], **extra)


def _pipeline_config(args, file_cfg):
    p = _resolve(args, file_cfg, PIPELINE_OPTIONS)
    h = _resolve(args, file_cfg, CODING_OPTIONS)
    return PipelineConfig(n0=p["n0"], fov_deg=p["fov"], viewport_side=p["viewport_side"], c=p["c"],
                          laplace_mu=p["laplace_mu"], laplace_b=p["laplace_b"],
                          reduction=p["reduction"], threads=p["threads"], hyperparams=_hyperparams(h))


def _load_dictionary(args, file_cfg):
    path = args.dict or file_cfg.get("dict") or os.environ.get(DICT_ENV)
    if not path:
        raise CliError(f"no dictionary given (use --dict or set {DICT_ENV})", EXIT_MODEL)
    try:
        return Dictionary.load(path)
    except OSError as exc:
        raise CliError(f"cannot read dictionary {path}: {exc}", EXIT_MODEL) from None
    except FormatError as exc:
        raise CliError(f"invalid dictionary {path}: {exc}", EXIT_MODEL) from None


def _load_erp(path):
    try:
        return ErpImage(load_luma(path))
    except OSError as exc:
        raise CliError(f"cannot read image {path}: {exc}", EXIT_IO) from None


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_score(args):
    file_cfg = _file_config(args)
    config = _pipeline_config(args, file_cfg)
    images = [_load_erp(p) for p in (args.ref_left, args.ref_right, args.dis_left, args.dis_right)]
    dictionary = _load_dictionary(args, file_cfg)
    ref = ErpStereoPair(images[0], images[1])
    dis = ErpStereoPair(images[2], images[3])
    result = score_pair(ref, dis, dictionary, config)
    _write_json(result.to_json(), args.out)
    if args.csv:
        write_fusion_csv(result.records, args.csv)
    return EXIT_OK


def cmd_benchmark(args):
    file_cfg = _file_config(args)
    config = _pipeline_config(args, file_cfg)
    if not os.path.isfile(args.manifest):
        raise CliError(f"cannot read manifest {args.manifest}", EXIT_IO)
    dictionary = _load_dictionary(args, file_cfg) if args.metric == "soiqe" else None
    result = run_benchmark(args.manifest, dictionary, config, metric=args.metric)
    os.makedirs(args.out_dir, exist_ok=True)
    write_report(result.report, os.path.join(args.out_dir, "report.json"))
    write_items_csv(result.items, os.path.join(args.out_dir, "items.csv"))
    if args.scatter:
        write_scatter_csv(result.items, os.path.join(args.out_dir, "scatter.csv"))
    if result.report.degenerate:
        print(f"degenerate dataset: {result.report.error}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_train_dict(args):
    file_cfg = _file_config(args)
    h = _resolve(args, file_cfg, CODING_OPTIONS)
    t = _resolve(args, file_cfg, TRAIN_OPTIONS)
    hp = _hyperparams(h, dict_epochs=t["epochs"], dict_lr=t["dict_lr"], batch_size=t["batch_size"],
                      seed=args.seed)
    try:
        names = sorted(f for f in os.listdir(args.corpus) if f.lower().endswith(IMAGE_EXTS))
    except OSError as exc:
        raise CliError(f"cannot list corpus {args.corpus}: {exc}", EXIT_IO) from None
    if not names:
        raise CliError(f"no images found in {args.corpus}", EXIT_VALIDATION)
    images = [preprocess(auto_downsample(_load_erp(os.path.join(args.corpus, f)).luma)) for f in names]
    patches = training_patches(images, args.patch, args.seed)
    d = train_dictionary(patches, args.patch, args.basis, hp,
                         corpus_id=os.path.basename(os.path.normpath(args.corpus)))
    d.save(args.out)
    return EXIT_OK


def cmd_viewports(args):
    erp = ErpImage(auto_downsample(_load_erp(args.erp).luma))
    os.makedirs(args.out_dir, exist_ok=True)
    for i, vp in enumerate(sample_viewpoints(args.n0)):
        view = render_viewport(erp, vp, args.fov, args.side)
        name = f"vp_{i:02d}_{vp.latitude_deg:g}_{vp.longitude_deg:g}.png"
        save_luma(view.luma, os.path.join(args.out_dir, name))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="soiqe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score one distorted stereo panorama against its reference")
    for name in ("ref-left", "ref-right", "dis-left", "dis-right"):
        p.add_argument("--" + name, required=True)
    p.add_argument("--dict", help=f"dictionary file (default: ${DICT_ENV})")
    p.add_argument("--config", help="key=value file; flags take precedence")
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    p.add_argument("--csv", help="write the per-viewport fusion breakdown as CSV")
    _add_options(p, PIPELINE_OPTIONS)
    _add_options(p, CODING_OPTIONS)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("benchmark", help="score a manifest and report PLCC/SROCC/RMSE/OR")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dict", help=f"dictionary file (default: ${DICT_ENV})")
    p.add_argument("--config", help="key=value file; flags take precedence")
    p.add_argument("--metric", choices=("soiqe", "psnr"), default="soiqe")
    p.add_argument("--scatter", action="store_true", help="also write scatter.csv (mos, mapped)")
    _add_options(p, PIPELINE_OPTIONS)
    _add_options(p, CODING_OPTIONS)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("train-dict", help="learn a dictionary from a folder of images")
    p.add_argument("--corpus", required=True)
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--basis", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key=value file; flags take precedence")
    _add_options(p, CODING_OPTIONS)
    _add_options(p, TRAIN_OPTIONS)
    p.set_defaults(func=cmd_train_dict)

    p = sub.add_parser("viewports", help="write the sampled viewports of a panorama as PNGs")
    p.add_argument("--erp", required=True)
    p.add_argument("--n0", type=int, default=8)
    p.add_argument("--fov", type=float, default=90.0)
    p.add_argument("--side", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_viewports)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"soiqe: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"soiqe: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidArgumentError, NumericFailureError, SoiqeError) as exc:
        print(f"soiqe: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

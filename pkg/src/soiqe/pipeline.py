"""End-to-end scoring of a distorted stereo panorama against its reference."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .coding import PcHyperparams, encode_patches, image_patches
from .errors import InvalidArgumentError
from .fusion import FusionRecord, LaplaceLatitudeModel, content_weight, fusion_weights, location_weight
from .retina import auto_downsample, preprocess
from .rivalry import DEFAULT_C, viewport_quality
from .sphere import ErpImage, ErpStereoPair, default_viewport_side, render_viewport, sample_viewpoints

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class PipelineConfig:
    n0: int = 8
    fov_deg: float = 90.0
    viewport_side: int = None
    c: float = DEFAULT_C
    laplace_mu: float = 0.0
    laplace_b: float = 15.0
    reduction: str = "sum"
    threads: int = 1
    hyperparams: PcHyperparams = field(default_factory=PcHyperparams)

    def __post_init__(self):
        if self.n0 < 4:
            raise InvalidArgumentError(f"n0 must be >= 4, got {self.n0}")
        if not 0 < self.fov_deg < 180:
            raise InvalidArgumentError(f"fov_deg must lie in (0, 180), got {self.fov_deg}")
        if self.viewport_side is not None and self.viewport_side < 16:
            raise InvalidArgumentError(f"viewport_side must be >= 16, got {self.viewport_side}")
        if not self.c > 0:
            raise InvalidArgumentError("C must be positive")
        if self.threads < 1:
            raise InvalidArgumentError("threads must be >= 1")
        LaplaceLatitudeModel(self.laplace_mu, self.laplace_b)

    @property
    def laplace(self):
        return LaplaceLatitudeModel(self.laplace_mu, self.laplace_b)

    def side_for(self, erp_width):
        if self.viewport_side is not None:
            return self.viewport_side
        return default_viewport_side(erp_width, self.fov_deg)

    def echo(self, dictionary=None):
        out = asdict(self)
        out.pop("threads")
        if dictionary is not None:
            out["dictionary"] = {"patch_side": dictionary.patch_side,
                                 "n_basis": dictionary.n_basis,
                                 "seed": dictionary.seed,
                                 "corpus": dictionary.meta.get("corpus", "")}
        return out


@dataclass(frozen=True, eq=False)
class ViewData:
    """Rendered viewports of one panorama and the codes of all their blocks."""

    viewports: list
    codes: list


@dataclass(frozen=True, eq=False)
class ScoreResult:
    score: float
    records: list
    qualities: list
    config: dict

    def to_json(self):
        return {
            "schema": SCHEMA_VERSION,
            "score": self.score,
            "per_viewport": [asdict(r) for r in self.records],
            "config": self.config,
        }


def prepare_view(erp, dictionary, config=PipelineConfig()):
    """Downsample, render every viewport, preprocess and encode its blocks."""
    luma = erp.luma if isinstance(erp, ErpImage) else np.asarray(erp, dtype=np.float64)
    small = ErpImage(np.clip(auto_downsample(luma), 0.0, 1.0))
    side = config.side_for(small.width)
    if side < dictionary.patch_side:
        raise InvalidArgumentError(
            f"viewport side {side} is smaller than the patch side {dictionary.patch_side}")
    viewports = [render_viewport(small, vp, config.fov_deg, side) for vp in sample_viewpoints(config.n0)]
    tiles = [image_patches(preprocess(v.luma), dictionary.patch_side) for v in viewports]
    codes = encode_patches(np.concatenate(tiles), dictionary, config.hyperparams)
    per = len(tiles[0])
    split = [_slice(codes, i * per, (i + 1) * per) for i in range(len(tiles))]
    return ViewData(viewports, split)


def _slice(codes, start, stop):
    return type(codes)(codes.r[start:stop], codes.prediction[start:stop],
                       codes.error[start:stop], codes.objective[start:stop])


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def prepare_stereo(pair, dictionary, config=PipelineConfig()):
    left, right = _map(lambda e: prepare_view(e, dictionary, config), [pair.left, pair.right],
                       config.threads)
    return left, right


def _check_pairs(ref, dis):
    for p in (ref, dis):
        if not isinstance(p, ErpStereoPair):
            raise InvalidArgumentError("expected ErpStereoPair inputs")
    if ref.left.luma.shape != dis.left.luma.shape:
        raise InvalidArgumentError(
            f"reference {ref.left.luma.shape} and distorted {dis.left.luma.shape} sizes differ")


def score_prepared(ref_views, dis_views, dictionary, config=PipelineConfig()):
    """Score from already prepared reference and distorted views."""
    ref_l, ref_r = ref_views
    dis_l, dis_r = dis_views
    laplace = config.laplace
    qualities, cw, lw = [], [], []
    for n, (vl, vr) in enumerate(zip(dis_l.viewports, dis_r.viewports)):
        vq = viewport_quality((ref_l.codes[n], dis_l.codes[n]), (ref_r.codes[n], dis_r.codes[n]),
                              dictionary, config.c, config.reduction)
        qualities.append(vq)
        cw.append(content_weight(vl.luma, vr.luma, vq.w_left, vq.w_right))
        lw.append(location_weight(vl.center.latitude_deg, laplace))
    w = fusion_weights(cw, lw)
    q = np.array([vq.q for vq in qualities])
    score = float(np.sum(w * q))
    records = [
        FusionRecord(n, v.center.latitude_deg, v.center.longitude_deg,
                     float(q[n]), float(cw[n]), float(lw[n]), float(w[n]))
        for n, v in enumerate(dis_l.viewports)
    ]
    return ScoreResult(score, records, qualities, config.echo(dictionary))


def score_pair(ref, dis, dictionary, config=PipelineConfig()):
    """Quality score of the distorted pair ``dis`` against reference ``ref``."""
    _check_pairs(ref, dis)
    views = _map(lambda e: prepare_view(e, dictionary, config),
                 [ref.left, ref.right, dis.left, dis.right], config.threads)
    return score_prepared(views[:2], views[2:], dictionary, config)


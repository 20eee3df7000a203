"""Benchmark harness: manifests, logistic mapping and the four IQA criteria."""

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .errors import InvalidArgumentError, UndefinedCorrelationError
from .imageio import load_luma
from .pipeline import PipelineConfig, prepare_stereo, prepare_view, score_prepared
from .sphere import ErpImage, ErpStereoPair

SCHEMA_VERSION = 1
MANIFEST_COLUMNS = ("id", "ref_left_path", "ref_right_path", "dis_left_path", "dis_right_path", "mos")


# -- manifest -----------------------------------------------------------------

@dataclass(frozen=True)
class ManifestRow:
    id: str
    ref_left_path: str
    ref_right_path: str
    dis_left_path: str
    dis_right_path: str
    mos: float
    mos_std: float = None
    tags: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DatasetManifest:
    rows: list
    base_dir: str = "."

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    @property
    def has_std(self):
        return bool(self.rows) and all(r.mos_std is not None for r in self.rows)


def read_manifest(path):
    """Parse a UTF-8 CSV manifest; paths are relative to the manifest's folder."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in MANIFEST_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise InvalidArgumentError(f"manifest {path} lacks columns: {', '.join(missing)}")
        rows, seen = [], set()
        for line, raw in enumerate(reader, start=2):
            rid = raw["id"].strip()
            if not rid or rid in seen:
                raise InvalidArgumentError(f"{path}:{line}: empty or duplicate id {rid!r}")
            seen.add(rid)
            paths = [raw[c].strip() for c in MANIFEST_COLUMNS[1:5]]
            if not all(paths):
                raise InvalidArgumentError(f"{path}:{line}: empty image path")
            try:
                mos = float(raw["mos"])
                std = raw.get("mos_std")
                std = float(std) if std not in (None, "") else None
            except ValueError as exc:
                raise InvalidArgumentError(f"{path}:{line}: {exc}") from None
            if not math.isfinite(mos):
                raise InvalidArgumentError(f"{path}:{line}: mos must be finite")
            tags = {k: v for k, v in raw.items() if k not in MANIFEST_COLUMNS and k != "mos_std"}
            rows.append(ManifestRow(rid, *paths, mos=mos, mos_std=std, tags=tags))
    return DatasetManifest(rows, os.path.dirname(os.path.abspath(path)))


# -- logistic mapping -----------------------------------------------------------

@dataclass(frozen=True)
class LogisticParams:
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float

    def __call__(self, x):
        return logistic5(np.asarray(x, dtype=np.float64), self.as_array())

    def as_array(self):
        return np.array([self.beta1, self.beta2, self.beta3, self.beta4, self.beta5])


def logistic5(x, beta):
    b1, b2, b3, b4, b5 = beta
    # 1/2 - 1/(1 + exp(z)) == expit(z) - 1/2
    return b1 * (expit(b2 * (x - b3)) - 0.5) + b4 * x + b5


def _logistic_jacobian(x, beta):
    b1, b2, b3, _, _ = beta
    s = expit(b2 * (x - b3))
    ds = s * (1.0 - s)
    return np.column_stack([s - 0.5, b1 * ds * (x - b3), -b1 * ds * b2, x, np.ones_like(x)])


@dataclass(frozen=True)
class LogisticFit:
    params: LogisticParams
    fallback: bool
    rss: float


def _linear_fit(x, y):
    a, b = np.polyfit(x, y, 1)
    return np.array([0.0, 0.0, 0.0, a, b])


def fit_logistic(pred, mos, iterations=200):
    """Least-squares fit of the five-parameter logistic by Levenberg-Marquardt.

    Falls back to the best straight line (``beta1 = 0``) whenever that fits at
    least as well or the iteration leaves the finite range.
    """
    x = np.asarray(pred, dtype=np.float64)
    y = np.asarray(mos, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError("pred and mos must be 1-D and of equal length")
    if len(x) < 5:
        raise InvalidArgumentError(f"logistic fit needs at least 5 points, got {len(x)}")
    if np.ptp(x) == 0.0:
        raise InvalidArgumentError("predictions are all equal")

    sign = 1.0 if np.corrcoef(x, y)[0, 1] >= 0 or np.ptp(y) == 0.0 else -1.0
    beta = np.array([np.ptp(y), sign * 4.0 / np.ptp(x), x.mean(), 0.0, y.mean()])
    res = y - logistic5(x, beta)
    rss = float(res @ res)
    mu = None
    for _ in range(iterations):
        jac = _logistic_jacobian(x, beta)
        jtj = jac.T @ jac
        grad = jac.T @ res
        diag = np.maximum(np.diag(jtj), 1e-12)
        if mu is None:
            mu = 1e-3 * diag.max()
        improved = False
        while mu < 1e16:
            try:
                step = np.linalg.solve(jtj + mu * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                mu *= 4.0
                continue
            trial = beta + step
            t_res = y - logistic5(x, trial)
            t_rss = float(t_res @ t_res)
            if np.isfinite(t_rss) and t_rss <= rss:
                beta, res, rss = trial, t_res, t_rss
                mu = max(mu / 3.0, 1e-15)
                improved = True
                break
            mu *= 4.0
        if not improved or rss == 0.0:
            break

    lin = _linear_fit(x, y)
    lin_res = y - logistic5(x, lin)
    lin_rss = float(lin_res @ lin_res)
    if not (np.all(np.isfinite(beta)) and np.isfinite(rss)) or lin_rss < rss:
        return LogisticFit(LogisticParams(*map(float, lin)), True, lin_rss)
    return LogisticFit(LogisticParams(*map(float, beta)), False, rss)


# -- criteria -------------------------------------------------------------------

def _pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError("inputs must be 1-D and of equal length")
    if len(x) < 3:
        raise InvalidArgumentError(f"need at least 3 items, got {len(x)}")
    return x, y


def _pearson(x, y):
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a zero-variance input")
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


def plcc(x, y):
    return _pearson(*_pair(x, y))


def srocc(x, y):
    """Spearman correlation: Pearson on average ranks."""
    x, y = _pair(x, y)
    return _pearson(rankdata(x), rankdata(y))


def rmse(x, y):
    x, y = _pair(x, y)
    return float(np.sqrt(np.mean((x - y) ** 2)))


def outlier_ratio(mapped, mos, mos_std=None):
    """Fraction of items whose error exceeds twice the applicable std.

    With ``mos_std`` the threshold is per item; otherwise it is twice the
    population std of the residuals ``mos - mapped``.
    """
    mapped = np.asarray(mapped, dtype=np.float64)
    mos = np.asarray(mos, dtype=np.float64)
    if mapped.shape != mos.shape:
        raise InvalidArgumentError("mapped and mos differ in length")
    if len(mos) == 0:
        raise InvalidArgumentError("outlier ratio of an empty set")
    return float(np.mean(outlier_flags(mapped, mos, mos_std)))


def outlier_flags(mapped, mos, mos_std=None):
    err = np.abs(np.asarray(mapped, dtype=np.float64) - np.asarray(mos, dtype=np.float64))
    if mos_std is None:
        threshold = 2.0 * np.std(np.asarray(mos) - np.asarray(mapped))
    else:
        threshold = 2.0 * np.asarray(mos_std, dtype=np.float64)
    return err > threshold


def psnr(ref, dis, peak=1.0):
    """PSNR in dB, capped at 100 dB for identical inputs."""
    mse = float(np.mean((np.asarray(ref, dtype=np.float64) - np.asarray(dis, dtype=np.float64)) ** 2))
    return 10.0 * math.log10(peak * peak / max(mse, peak * peak * 1e-10))


# -- benchmark ------------------------------------------------------------------

@dataclass
class MetricsReport:
    n: int
    plcc: float = None
    srocc: float = None
    rmse: float = None
    or_ratio: float = None
    or_rule: str = None
    or_ratio_global: float = None
    params: LogisticParams = None
    logistic_fallback: bool = False
    degenerate: bool = False
    error: str = None
    failed: list = field(default_factory=list)
    metric: str = "soiqe"
    config: dict = field(default_factory=dict)

    def to_json(self):
        out = asdict(self)
        out["schema"] = SCHEMA_VERSION
        out["n_failed"] = len(self.failed)
        return out


@dataclass(frozen=True)
class ItemResult:
    id: str
    raw_score: float
    mapped_score: float
    mos: float
    abs_error: float
    outlier: bool


@dataclass
class BenchmarkResult:
    report: MetricsReport
    items: list


def compute_metrics(raw, mos, mos_std=None):
    """Fit the logistic map and evaluate all criteria.

    Returns ``(fields, mapped, outliers)`` where ``fields`` holds the report
    entries.
    """
    raw = np.asarray(raw, dtype=np.float64)
    mos = np.asarray(mos, dtype=np.float64)
    if len(raw) < 5:
        raise InvalidArgumentError(f"benchmark needs at least 5 scored items, got {len(raw)}")
    if np.ptp(raw) == 0.0 or np.ptp(mos) == 0.0:
        raise UndefinedCorrelationError(
            "degenerate dataset: predictions or MOS have zero variance")
    fit = fit_logistic(raw, mos)
    mapped = fit.params(raw)
    fields = {
        "plcc": plcc(mapped, mos),
        "srocc": srocc(raw, mos),
        "rmse": rmse(mapped, mos),
        "params": fit.params,
        "logistic_fallback": fit.fallback,
    }
    global_or = outlier_ratio(mapped, mos)
    if mos_std is not None:
        flags = outlier_flags(mapped, mos, mos_std)
        fields.update(or_ratio=float(np.mean(flags)), or_rule="2*mos_std per item",
                      or_ratio_global=global_or)
    else:
        flags = outlier_flags(mapped, mos)
        fields.update(or_ratio=global_or, or_rule="2*std of residuals")
    return fields, mapped, flags


def _load_pair(manifest, left, right):
    return ErpStereoPair(ErpImage(load_luma(manifest.resolve(left))),
                         ErpImage(load_luma(manifest.resolve(right))))


def run_benchmark(manifest, dictionary=None, config=PipelineConfig(), metric="soiqe"):
    """Score every manifest row and evaluate the predictions against MOS.

    Rows whose images cannot be read or do not match in size are excluded and
    listed in ``report.failed``. A degenerate dataset yields a report with
    ``degenerate=True`` and the reason in ``error`` instead of raising.
    """
    if metric not in ("soiqe", "psnr"):
        raise InvalidArgumentError(f"unknown metric {metric!r}")
    if metric == "soiqe" and dictionary is None:
        raise InvalidArgumentError("a dictionary is required for the soiqe metric")
    if isinstance(manifest, (str, os.PathLike)):
        manifest = read_manifest(manifest)

    ref_cache = {}
    failed = []

    def reference(row):
        key = (row.ref_left_path, row.ref_right_path)
        if key not in ref_cache:
            try:
                pair = _load_pair(manifest, *key)
                views = prepare_stereo(pair, dictionary, config) if metric == "soiqe" else None
                ref_cache[key] = (pair, views, None)
            except (OSError, ValueError) as exc:
                ref_cache[key] = (None, None, f"{type(exc).__name__}: {exc}")
        return ref_cache[key]

    def score(row):
        ref, ref_views, err = reference(row)
        if err is not None:
            return err
        try:
            dis = _load_pair(manifest, row.dis_left_path, row.dis_right_path)
            if dis.left.luma.shape != ref.left.luma.shape:
                raise InvalidArgumentError(
                    f"distorted size {dis.left.luma.shape} differs from reference {ref.left.luma.shape}")
            if metric == "psnr":
                return 0.5 * (psnr(ref.left.luma, dis.left.luma) + psnr(ref.right.luma, dis.right.luma))
            dis_views = (prepare_view(dis.left, dictionary, config),
                         prepare_view(dis.right, dictionary, config))
            return score_prepared(ref_views, dis_views, dictionary, config).score
        except (OSError, ValueError) as exc:
            return f"{type(exc).__name__}: {exc}"

    # references first so the per-row workers only read the cache
    for row in manifest.rows:
        reference(row)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            outcomes = list(pool.map(score, manifest.rows))
    else:
        outcomes = [score(row) for row in manifest.rows]

    ok_rows, raw = [], []
    for row, out in zip(manifest.rows, outcomes):
        if isinstance(out, str):
            failed.append({"id": row.id, "error": out})
        else:
            ok_rows.append(row)
            raw.append(out)

    echo = config.echo(dictionary if metric == "soiqe" else None)
    report = MetricsReport(n=len(ok_rows), failed=failed, metric=metric, config=echo)
    mos = np.array([r.mos for r in ok_rows])
    std = np.array([r.mos_std for r in ok_rows]) if ok_rows and all(
        r.mos_std is not None for r in ok_rows) else None
    try:
        fields, mapped, flags = compute_metrics(raw, mos, std)
    except (UndefinedCorrelationError, InvalidArgumentError) as exc:
        report.degenerate = True
        report.error = str(exc)
        items = [ItemResult(r.id, s, math.nan, r.mos, math.nan, False) for r, s in zip(ok_rows, raw)]
        return BenchmarkResult(report, items)
    for k, v in fields.items():
        setattr(report, k, v)
    items = [ItemResult(r.id, float(s), float(m), r.mos, float(abs(m - r.mos)), bool(f))
             for r, s, m, f in zip(ok_rows, raw, mapped, flags)]
    return BenchmarkResult(report, items)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_safe(report.to_json()), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_items_csv(items, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["id", "raw_score", "mapped_score", "mos", "abs_error", "outlier"])
        for it in items:
            out.writerow([it.id, repr(it.raw_score), repr(it.mapped_score), repr(it.mos),
                          repr(it.abs_error), int(it.outlier)])


def write_scatter_csv(items, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["mos", "mapped"])
        for it in items:
            out.writerow([repr(it.mos), repr(it.mapped_score)])

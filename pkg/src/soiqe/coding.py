"""Single-level predictive coding: patch inference and dictionary learning.

The generative model is ``patch = f(U r) + noise`` with the coding objective

    E(r, U) = |patch - f(U r)|^2 / sigma2 + alpha * sum(log(1 + r^2)) + lam * sum(U^2)

``f`` is the identity by default; ``tanh`` is available through
:class:`PcHyperparams`. The dictionary is stored as a ``(K, L*L)`` array whose
rows are the basis vectors, so the prediction for a row vector ``r`` is
``f(r @ basis)``.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import FormatError, InvalidArgumentError, NumericFailureError

MAGIC = b"SOPC"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class PcHyperparams:
    alpha: float = 0.05
    lam: float = 1e-4
    sigma2: float = 1.0
    r_steps: int = 50
    r_lr: float = 0.1
    max_halvings: int = 10
    dict_epochs: int = 40
    dict_lr: float = 1.0
    dict_lr_decay: float = 0.95
    batch_size: int = 256
    seed: int = 0
    activation: str = "identity"

    def __post_init__(self):
        if self.alpha < 0 or self.lam < 0:
            raise InvalidArgumentError("alpha and lam must be non-negative")
        if not self.sigma2 > 0:
            raise InvalidArgumentError("sigma2 must be positive")
        if self.r_steps < 0 or self.max_halvings < 0 or self.dict_epochs < 0:
            raise InvalidArgumentError("iteration counts must be non-negative")
        if not (self.r_lr > 0 and self.dict_lr > 0 and self.batch_size > 0):
            raise InvalidArgumentError("step sizes and batch size must be positive")
        if self.activation not in ("identity", "tanh"):
            raise InvalidArgumentError(f"unknown activation {self.activation!r}")

    @property
    def use_tanh(self):
        return self.activation == "tanh"

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _population_variance(basis):
    return np.asarray(basis, dtype=np.float64).var(axis=1)


@dataclass(eq=False)
class Dictionary:
    """Learned basis ("patterns") with cached per-basis variances.

    ``basis`` is float32 with shape ``(K, L*L)``; ``basis_variance`` is the
    float64 population variance of each row.
    """

    patch_side: int
    basis: np.ndarray
    seed: int = 0
    meta: dict = field(default_factory=dict)
    basis_variance: np.ndarray = field(init=False)

    def __post_init__(self):
        basis = np.ascontiguousarray(self.basis, dtype=np.float32)
        if self.patch_side < 4:
            raise InvalidArgumentError(f"patch side must be >= 4, got {self.patch_side}")
        if basis.ndim != 2 or basis.shape[0] < 1 or basis.shape[1] != self.patch_side ** 2:
            raise InvalidArgumentError(
                f"basis must have shape (K>=1, {self.patch_side ** 2}), got {basis.shape}")
        if not np.all(np.isfinite(basis)):
            raise InvalidArgumentError("basis entries must be finite")
        basis.setflags(write=False)
        self.basis = basis
        self.basis_variance = _population_variance(basis)
        self._basis64 = basis.astype(np.float64)

    @property
    def n_basis(self):
        return self.basis.shape[0]

    @property
    def patch_dim(self):
        return self.basis.shape[1]

    @property
    def basis64(self):
        return self._basis64

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return (self.patch_side == other.patch_side and self.seed == other.seed
                and self.meta == other.meta
                and np.array_equal(self.basis, other.basis)
                and np.array_equal(self.basis_variance, other.basis_variance))

    def to_bytes(self):
        k, d = self.basis.shape
        meta = json.dumps(self.meta, sort_keys=True).encode("utf-8")
        return b"".join([
            MAGIC,
            struct.pack("<III", FORMAT_VERSION, self.patch_side, k),
            self.basis.astype("<f4").tobytes(),
            self.basis_variance.astype("<f4").tobytes(),
            struct.pack("<QI", self.seed, len(meta)),
            meta,
        ])

    @classmethod
    def from_bytes(cls, data):
        data = bytes(data)
        if len(data) < 16:
            raise FormatError("dictionary file truncated in header")
        if data[:4] != MAGIC:
            raise FormatError(f"bad magic {data[:4]!r}")
        version, side, k = struct.unpack_from("<III", data, 4)
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported dictionary format version {version}")
        if side < 4 or k < 1:
            raise FormatError(f"invalid dimensions L={side}, K={k}")
        d = side * side
        off = 16
        need = off + 4 * k * d + 4 * k + 12
        if len(data) < need:
            raise FormatError("dictionary file truncated in body")
        basis = np.frombuffer(data, dtype="<f4", count=k * d, offset=off).reshape(k, d)
        off += 4 * k * d
        stored_var = np.frombuffer(data, dtype="<f4", count=k, offset=off)
        off += 4 * k
        seed, n_meta = struct.unpack_from("<QI", data, off)
        off += 12
        if len(data) != off + n_meta:
            raise FormatError("dictionary metadata length does not match file size")
        try:
            meta = json.loads(data[off:].decode("utf-8")) if n_meta else {}
        except (UnicodeDecodeError, ValueError) as exc:
            raise FormatError(f"unreadable dictionary metadata: {exc}") from None
        try:
            out = cls(side, basis.copy(), seed=seed, meta=meta)
        except InvalidArgumentError as exc:
            raise FormatError(str(exc)) from None
        if not np.array_equal(out.basis_variance.astype("<f4"), stored_var):
            raise FormatError("stored basis variances disagree with the basis")
        return out

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@dataclass(frozen=True, eq=False)
class CodingResult:
    """Inference output for one patch; ``error == patch - prediction``."""

    r: np.ndarray
    prediction: np.ndarray
    error: np.ndarray
    objective: float


@dataclass(frozen=True, eq=False)
class PatchCodes:
    """Batched :class:`CodingResult`; row ``i`` belongs to patch ``i``."""

    r: np.ndarray
    prediction: np.ndarray
    error: np.ndarray
    objective: np.ndarray

    def __len__(self):
        return self.r.shape[0]

    def __getitem__(self, i):
        return CodingResult(self.r[i], self.prediction[i], self.error[i], float(self.objective[i]))

    @classmethod
    def stack(cls, results):
        results = list(results)
        return cls(np.array([c.r for c in results], dtype=np.float64),
                   np.array([c.prediction for c in results], dtype=np.float64),
                   np.array([c.error for c in results], dtype=np.float64),
                   np.array([c.objective for c in results], dtype=np.float64))


def _basis_of(dictionary):
    if isinstance(dictionary, Dictionary):
        return dictionary.basis64
    return np.asarray(dictionary, dtype=np.float64)


def _predict(r, basis, hp):
    a = r @ basis
    return np.tanh(a) if hp.use_tanh else a


def objective(patch, r, dictionary, hp=PcHyperparams()):
    """Full coding objective for one patch, including the dictionary penalty."""
    basis = _basis_of(dictionary)
    patch = np.asarray(patch, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if patch.shape != (basis.shape[1],) or r.shape != (basis.shape[0],):
        raise InvalidArgumentError(
            f"expected patch of length {basis.shape[1]} and r of length {basis.shape[0]}")
    if not (np.all(np.isfinite(patch)) and np.all(np.isfinite(r)) and np.all(np.isfinite(basis))):
        raise InvalidArgumentError("objective inputs must be finite")
    res = patch - _predict(r, basis, hp)
    return float(res @ res / hp.sigma2 + hp.alpha * np.log1p(r * r).sum()
                 + hp.lam * (basis * basis).sum())


def grad_r(patch, r, dictionary, hp=PcHyperparams()):
    """Analytic gradient of :func:`objective` with respect to ``r``."""
    basis = _basis_of(dictionary)
    patch = np.asarray(patch, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    pred = _predict(r, basis, hp)
    res = patch - pred
    if hp.use_tanh:
        res = res * (1.0 - pred * pred)
    return (-2.0 / hp.sigma2) * (basis @ res) + 2.0 * hp.alpha * r / (1.0 + r * r)


def batch_objective(patches, codes, dictionary, hp=PcHyperparams()):
    """Mean per-patch objective over a batch plus the dictionary penalty."""
    basis = _basis_of(dictionary)
    patches = np.asarray(patches, dtype=np.float64)
    codes = np.asarray(codes, dtype=np.float64)
    res = patches - _predict(codes, basis, hp)
    per = (res * res).sum(axis=1) / hp.sigma2 + hp.alpha * np.log1p(codes * codes).sum(axis=1)
    return float(per.mean() + hp.lam * (basis * basis).sum())


def grad_basis(patches, codes, dictionary, hp=PcHyperparams()):
    """Gradient of :func:`batch_objective` with respect to the basis rows."""
    basis = _basis_of(dictionary)
    patches = np.asarray(patches, dtype=np.float64)
    codes = np.asarray(codes, dtype=np.float64)
    pred = _predict(codes, basis, hp)
    res = patches - pred
    if hp.use_tanh:
        res = res * (1.0 - pred * pred)
    return (-2.0 / (hp.sigma2 * patches.shape[0])) * (codes.T @ res) + 2.0 * hp.lam * basis


def encode_patches(patches, dictionary, hp=PcHyperparams()):
    """Infer codes for a ``(P, L*L)`` batch of patches.

    Every patch starts from ``r = 0`` and takes ``hp.r_steps`` gradient steps;
    a step that would raise the objective is halved up to ``hp.max_halvings``
    times and dropped if it still does not improve.
    """
    basis = _basis_of(dictionary)
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim == 1:
        patches = patches[None, :]
    if patches.ndim != 2 or patches.shape[1] != basis.shape[1]:
        raise InvalidArgumentError(
            f"patches must have shape (P, {basis.shape[1]}), got {patches.shape}")
    r, obj, history = kernels.encode_batch(patches, basis, hp.sigma2, hp.alpha, hp.r_steps,
                                           hp.r_lr, hp.max_halvings, hp.use_tanh)
    bad = ~np.isfinite(obj)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NumericFailureError(f"coding objective diverged for patch {i}",
                                  log=history[:, i].tolist())
    pred = _predict(r, basis, hp)
    return PatchCodes(r, pred, patches - pred, obj)


def encode(patch, dictionary, hp=PcHyperparams()):
    """Infer the code of a single patch; see :func:`encode_patches`."""
    return encode_patches(np.asarray(patch, dtype=np.float64)[None, :], dictionary, hp)[0]


def image_patches(img, side):
    """Non-overlapping ``side x side`` tiles in raster order, flattened.

    Partial tiles at the right and bottom edges are dropped.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    nh, nw = h // side, w // side
    tiles = img[:nh * side, :nw * side].reshape(nh, side, nw, side).swapaxes(1, 2)
    return tiles.reshape(nh * nw, side * side)


def training_patches(images, side, seed):
    """Tile every preprocessed image and shuffle the pooled patches with ``seed``."""
    pooled = [image_patches(img, side) for img in images]
    pooled = [p for p in pooled if len(p)]
    if not pooled:
        return np.empty((0, side * side))
    patches = np.concatenate(pooled)
    order = np.random.default_rng(seed).permutation(len(patches))
    return patches[order]


def initial_basis(n_basis, patch_side, seed):
    rng = np.random.default_rng(seed)
    bound = 0.5 / patch_side
    return rng.uniform(-bound, bound, size=(n_basis, patch_side * patch_side))


def _mean_recon_error(patches, codes, basis, hp):
    res = patches - _predict(codes, basis, hp)
    return float((res * res).sum(axis=1).mean())


def train_dictionary(corpus, patch_side=16, n_basis=1024, hp=PcHyperparams(), held_out=None,
                     corpus_id=""):
    """Learn a dictionary by alternating code inference and basis descent.

    ``corpus`` yields flattened preprocessed patches and is consumed in order;
    each minibatch is encoded against the current basis and the basis then
    takes one step along the batch-mean gradient. The step size decays by
    ``hp.dict_lr_decay`` after every epoch.

    Per-epoch diagnostics land in ``meta``: mean training objective and
    reconstruction error, measured with the codes of that epoch, and the mean
    objective of ``held_out`` patches after the epoch when provided.
    """
    d = patch_side * patch_side
    patches = np.asarray([np.asarray(p, dtype=np.float64).ravel() for p in corpus], dtype=np.float64)
    if patches.size == 0:
        raise InvalidArgumentError("training corpus is empty")
    if patches.ndim != 2 or patches.shape[1] != d:
        raise InvalidArgumentError(f"corpus patches must have length {d}")
    if len(patches) < n_basis:
        raise InvalidArgumentError(
            f"corpus holds {len(patches)} patches, need at least n_basis={n_basis}")
    if held_out is not None:
        held_out = np.asarray(held_out, dtype=np.float64).reshape(-1, d)

    basis = initial_basis(n_basis, patch_side, hp.seed)
    lr = hp.dict_lr
    epoch_obj, epoch_err, held_obj = [], [], []
    for _ in range(hp.dict_epochs):
        obj_sum = err_sum = 0.0
        for start in range(0, len(patches), hp.batch_size):
            batch = patches[start:start + hp.batch_size]
            codes = encode_patches(batch, basis, hp)
            obj_sum += batch_objective(batch, codes.r, basis, hp) * len(batch)
            err_sum += _mean_recon_error(batch, codes.r, basis, hp) * len(batch)
            basis = basis - lr * grad_basis(batch, codes.r, basis, hp)
            if not np.all(np.isfinite(basis)):
                raise NumericFailureError("dictionary update diverged", log=epoch_obj)
        epoch_obj.append(obj_sum / len(patches))
        epoch_err.append(err_sum / len(patches))
        if held_out is not None:
            codes = encode_patches(held_out, basis, hp)
            held_obj.append(batch_objective(held_out, codes.r, basis, hp))
        lr *= hp.dict_lr_decay

    meta = {
        "corpus": corpus_id,
        "n_patches": int(len(patches)),
        "hyperparams": hp.as_dict(),
        "epoch_objective": epoch_obj,
        "epoch_recon_error": epoch_err,
    }
    if held_out is not None:
        meta["held_out_objective"] = held_obj
    return Dictionary(patch_side, basis, seed=hp.seed, meta=meta)


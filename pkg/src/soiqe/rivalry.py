"""Binocular rivalry scoring of one stereo viewport from its patch codes.

Each block gets a similarity between reference and distorted codes, and the
distorted views compete through a prior (variance-weighted code magnitude), a
likelihood (relative squared prediction error) and the variance of the
squared error map. Pairwise quantities are normalised between the views as
``x_L / (x_L + x_R)``; a zero denominator yields ``(0.5, 0.5)``.
"""

from dataclasses import dataclass

import numpy as np

from .coding import PatchCodes
from .errors import InvalidArgumentError

DEFAULT_C = 1e-4


def _check_c(c):
    if not c > 0:
        raise InvalidArgumentError(f"C must be positive, got {c!r}")


def similarity_rows(r_ref, r_dis, c=DEFAULT_C):
    """Row-wise :func:`block_similarity` for two ``(P, K)`` code arrays."""
    _check_c(c)
    r_ref = np.asarray(r_ref, dtype=np.float64)
    r_dis = np.asarray(r_dis, dtype=np.float64)
    if r_ref.shape != r_dis.shape:
        raise InvalidArgumentError(f"code shapes differ: {r_ref.shape} vs {r_dis.shape}")
    terms = (2.0 * r_ref * r_dis + c) / (r_ref * r_ref + r_dis * r_dis + c)
    return terms.mean(axis=-1)


def block_similarity(r_ref, r_dis, c=DEFAULT_C):
    """Mean over basis indices of ``(2ab + C) / (a^2 + b^2 + C)``."""
    return float(similarity_rows(np.atleast_1d(r_ref), np.atleast_1d(r_dis), c))


def block_prior(r_dis, basis_variance):
    """Prior of a hypothesis: ``sum_j Var(U_j) * |r_j|``."""
    r_dis = np.asarray(r_dis, dtype=np.float64)
    basis_variance = np.asarray(basis_variance, dtype=np.float64)
    if r_dis.shape[-1] != basis_variance.shape[-1]:
        raise InvalidArgumentError("code length does not match the number of basis variances")
    return np.abs(r_dis) @ basis_variance


def normalize_pair(x_left, x_right):
    """``(x_L, x_R) / (x_L + x_R)``, elementwise, with ``0/0 -> 0.5``."""
    x_left = np.asarray(x_left, dtype=np.float64)
    x_right = np.asarray(x_right, dtype=np.float64)
    total = x_left + x_right
    zero = total == 0.0
    safe = np.where(zero, 1.0, total)
    return np.where(zero, 0.5, x_left / safe), np.where(zero, 0.5, x_right / safe)


def _likelihood_from_energy(e_left, e_right):
    e_left = np.asarray(e_left, dtype=np.float64)
    e_right = np.asarray(e_right, dtype=np.float64)
    total = e_left + e_right
    zero = total == 0.0
    safe = np.where(zero, 1.0, total)
    ew_left = np.where(zero, 0.5, 1.0 - e_left / safe)
    ew_right = np.where(zero, 0.5, 1.0 - e_right / safe)
    return ew_left, ew_right


def likelihood_weights(err_left, err_right):
    """Likelihood weights of the two views from their prediction-error maps."""
    err_left = np.asarray(err_left, dtype=np.float64)
    err_right = np.asarray(err_right, dtype=np.float64)
    if err_left.shape != err_right.shape:
        raise InvalidArgumentError("error maps differ in size")
    ew_l, ew_r = _likelihood_from_energy((err_left ** 2).sum(), (err_right ** 2).sum())
    return float(ew_l), float(ew_r)


def error_variance(err):
    """Population variance of the squared error map."""
    err = np.asarray(err, dtype=np.float64)
    if err.size == 0:
        raise InvalidArgumentError("error map is empty")
    return float(np.var(err.ravel() ** 2))


@dataclass(frozen=True, eq=False)
class BlockScores:
    """Per-block quantities of one view; every field is a length-N array.

    ``v`` and ``rr`` are raw; ``v_hat`` and ``rr_hat`` are normalised against
    the other view.
    """

    s: np.ndarray
    v: np.ndarray
    ew: np.ndarray
    rr: np.ndarray
    v_hat: np.ndarray
    rr_hat: np.ndarray

    @property
    def dominance(self):
        return self.v_hat * self.ew * self.rr_hat


@dataclass(frozen=True, eq=False)
class ViewportQuality:
    q: float
    n_blocks: int
    w_left: float
    w_right: float
    left: BlockScores
    right: BlockScores


def _as_codes(blocks):
    if isinstance(blocks, tuple) and len(blocks) == 2 and all(isinstance(b, PatchCodes) for b in blocks):
        return blocks
    pairs = list(blocks)
    if not pairs:
        return None
    return PatchCodes.stack(p[0] for p in pairs), PatchCodes.stack(p[1] for p in pairs)


def block_scores(blocks_left, blocks_right, basis_variance, c=DEFAULT_C):
    """Compute :class:`BlockScores` for both views."""
    left = _as_codes(blocks_left)
    right = _as_codes(blocks_right)
    if left is None or right is None:
        raise InvalidArgumentError("viewport needs at least one block per view")
    ref_l, dis_l = left
    ref_r, dis_r = right
    n = len(dis_l)
    if not (len(ref_l) == len(ref_r) == len(dis_r) == n):
        raise InvalidArgumentError(
            f"block counts differ: {len(ref_l)}, {n}, {len(ref_r)}, {len(dis_r)}")

    s_l = similarity_rows(ref_l.r, dis_l.r, c)
    s_r = similarity_rows(ref_r.r, dis_r.r, c)
    v_l = block_prior(dis_l.r, basis_variance)
    v_r = block_prior(dis_r.r, basis_variance)
    e2_l = dis_l.error ** 2
    e2_r = dis_r.error ** 2
    ew_l, ew_r = _likelihood_from_energy(e2_l.sum(axis=1), e2_r.sum(axis=1))
    rr_l = e2_l.var(axis=1)
    rr_r = e2_r.var(axis=1)
    vh_l, vh_r = normalize_pair(v_l, v_r)
    rh_l, rh_r = normalize_pair(rr_l, rr_r)
    return (BlockScores(s_l, v_l, ew_l, rr_l, vh_l, rh_l),
            BlockScores(s_r, v_r, ew_r, rr_r, vh_r, rh_r))


def viewport_quality(blocks_left, blocks_right, dictionary, c=DEFAULT_C, reduction="sum"):
    """Quality of one stereo viewport.

    ``blocks_left``/``blocks_right`` are ``(reference, distorted)`` pairs of
    :class:`PatchCodes`, or sequences of per-block ``(CodingResult,
    CodingResult)`` pairs. ``dictionary`` supplies the basis variances (a
    :class:`~soiqe.coding.Dictionary` or the variance array itself).

    ``q`` sums ``v_hat * ew * rr_hat * s`` over blocks and views; with
    ``reduction="mean"`` it is divided by the block count. ``w_left`` and
    ``w_right`` are the mean per-block dominance of each view.
    """
    if reduction not in ("sum", "mean"):
        raise InvalidArgumentError(f"reduction must be 'sum' or 'mean', got {reduction!r}")
    variance = getattr(dictionary, "basis_variance", dictionary)
    left, right = block_scores(blocks_left, blocks_right, variance, c)
    dom_l = left.dominance
    dom_r = right.dominance
    q = float(np.sum(dom_l * left.s + dom_r * right.s))
    n = len(dom_l)
    if reduction == "mean":
        q /= n
    return ViewportQuality(q, n, float(dom_l.mean()), float(dom_r.mean()), left, right)

"""Regular-grid codecs.

RJIP stores a regular mask at spacing r with quantised, tonally optimised
grey values and codes them by joint inpainting and prediction: the partially
accumulated reconstruction predicts each mask value in canonical order and
only the modular residual is entropy coded. RJIP-A replaces the isotropic
operator with anisotropic Shepard inpainting; prediction is impossible there
(derivatives need all neighbours), so the level stream is coded directly
with the adaptive bit coder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, container, entropy
from .image import MaskedData, make_regular_mask, mse, sample_values
from .search import golden_section_int, golden_section_real
from .shepard_aniso import inpaint_aniso
from .shepard_iso import compute_sigma, make_kernel, reconstruct, \
    AccumulationMaps, hole_fill_value
from .tonal import (DEFAULT_CLOSED_FORM_SWEEPS, DEFAULT_TRIAL_SWEEPS,
                    dequantize_array, make_tonal_state, quantize_array,
                    tonal_optimize_iso, trial_optimize_aniso)

DEFAULT_LAMBDA_RANGE = (0.5, 64.0)
DEFAULT_SIGMA_SCALE_RANGE = (0.5, 4.0)
RATIO_TOLERANCE = 0.05


@dataclass
class RjipParams:
    r: int
    q: int
    mode: str = "isotropic"            # or "anisotropic"
    lam: float | None = None           # anisotropic only
    sigma_scale: float | None = None   # anisotropic only

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1")
        if not 2 <= self.q <= 256:
            raise ValueError("q must be in [2, 256]")
        if self.mode not in ("isotropic", "anisotropic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.mode == "anisotropic") != (self.lam is not None):
            raise ValueError("lambda present iff mode is anisotropic")
        if (self.mode == "anisotropic") != (self.sigma_scale is not None):
            raise ValueError("sigma_scale present iff mode is anisotropic")


@dataclass
class EncodeResult:
    blob: bytes
    reconstruction: np.ndarray
    mse: float
    op_count: int
    params: object

    @property
    def ratio(self) -> float:
        h, w = self.reconstruction.shape
        return w * h / len(self.blob)


def _mask_levels(image, r: int, q: int):
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    mask = make_regular_mask(width, height, r)
    levels = quantize_array(sample_values(image, mask), q)
    return mask, levels


def rjip_encode_fixed(image, r: int, q: int,
                      sweeps: int = DEFAULT_CLOSED_FORM_SWEEPS) -> EncodeResult:
    """Encode with fixed grid spacing and level count.

    Pipeline: sample regular mask, quantise, closed-form tonal optimisation,
    then the prediction traversal whose residuals are range coded with a
    stored static table.
    """
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    mask = make_regular_mask(width, height, r)
    sigma = compute_sigma(mask.size, width, height)
    kernel = make_kernel(sigma)
    state = make_tonal_state(image, mask, q, kernel)
    tonal_optimize_iso(state, sweeps)

    xs = mask.positions[:, 0].astype(np.int64)
    ys = mask.positions[:, 1].astype(np.int64)
    residuals = np.zeros(mask.size, dtype=np.int64)
    v, w, ops = _kernels.rjip_traversal(xs, ys, state.levels, residuals, q,
                                        kernel.table, kernel.half,
                                        width, height, False)
    table = entropy.build_table(residuals, q)
    payload = entropy.range_encode(residuals, table)
    blob = container.pack_rjip(width, height, q, r,
                               entropy.serialize_table(table), payload)
    maps = AccumulationMaps(v, w, int(ops))
    rec = reconstruct(maps, hole_fill_value(state.values))
    return EncodeResult(blob=blob, reconstruction=rec, mse=mse(rec, image),
                        op_count=int(ops),
                        params=RjipParams(r=r, q=q))


def _decode_rjip(head: container.Header, reader) -> tuple[np.ndarray, int]:
    (r,) = reader.unpack("<B")
    table = entropy.deserialize_table(reader.take(2 * head.q), head.q)
    (plen,) = reader.unpack("<I")
    payload = reader.take(plen)
    mask = make_regular_mask(head.width, head.height, r)
    residuals = entropy.range_decode(payload, mask.size, table)
    sigma = compute_sigma(mask.size, head.width, head.height)
    kernel = make_kernel(sigma)
    xs = mask.positions[:, 0].astype(np.int64)
    ys = mask.positions[:, 1].astype(np.int64)
    levels = np.zeros(mask.size, dtype=np.int64)
    v, w, ops = _kernels.rjip_traversal(xs, ys, levels, residuals, head.q,
                                        kernel.table, kernel.half,
                                        head.width, head.height, True)
    values = dequantize_array(levels, head.q)
    rec = reconstruct(AccumulationMaps(v, w), hole_fill_value(values))
    return rec, int(ops)


def _optimize_aniso_params(image, mask, levels, q, sigma_base, lam0, scale0,
                           lam_range, scale_range, seed, alternations,
                           trial_sweeps, search_iters=8):
    """Alternate golden-section over (lambda, sigma_scale) with trial tonal."""
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    lam, scale = lam0, scale0
    pass1_kernel = make_kernel(sigma_base)

    def inpaint_mse(lam_x, scale_x, lv):
        u = inpaint_aniso(mask, dequantize_array(lv, q),
                          np.full(mask.size, scale_x * sigma_base),
                          lam_x, width, height)
        return mse(u, image)

    for it in range(alternations):
        lam, _ = golden_section_real(
            lambda x: inpaint_mse(container.round_fixed(x, container.LAMBDA_SCALE),
                                  scale, levels),
            lam_range[0], lam_range[1], search_iters)
        lam = container.round_fixed(lam, container.LAMBDA_SCALE)
        scale, _ = golden_section_real(
            lambda x: inpaint_mse(lam, container.round_fixed(x, container.LAMBDA_SCALE),
                                  levels),
            scale_range[0], scale_range[1], search_iters)
        scale = container.round_fixed(scale, container.LAMBDA_SCALE)
        sigmas = np.full(mask.size, scale * sigma_base)
        levels, _, _ = trial_optimize_aniso(mask, levels, q, image, sigmas,
                                            lam, pass1_kernel, trial_sweeps,
                                            seed + it)
    return lam, scale, levels


def rjip_a_encode_fixed(image, r: int, q: int, lam: float | None = None,
                        sigma_scale: float | None = None, seed: int = 0,
                        alternations: int = 2,
                        trial_sweeps: int = 1) -> EncodeResult:
    """Anisotropic regular-grid encode with fixed r and q.

    When lam or sigma_scale is None it is tuned by golden-section search,
    alternated with trial-and-error tonal optimisation; explicit values are
    used as given (after fixed-point rounding, so the decoder sees the same
    kernels).
    """
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    mask, levels = _mask_levels(image, r, q)
    sigma_base = compute_sigma(mask.size, width, height)
    pass1_kernel = make_kernel(sigma_base)

    optimize = lam is None or sigma_scale is None
    lam0 = container.round_fixed(lam if lam is not None else 8.0,
                                 container.LAMBDA_SCALE)
    scale0 = container.round_fixed(
        sigma_scale if sigma_scale is not None else 1.0,
        container.LAMBDA_SCALE)
    if optimize:
        lam_range = DEFAULT_LAMBDA_RANGE if lam is None else (lam0, lam0)
        scale_range = (DEFAULT_SIGMA_SCALE_RANGE if sigma_scale is None
                       else (scale0, scale0))
        lam0, scale0, levels = _optimize_aniso_params(
            image, mask, levels, q, sigma_base, lam0, scale0, lam_range,
            scale_range, seed, alternations, trial_sweeps)
    else:
        sigmas = np.full(mask.size, scale0 * sigma_base)
        levels, _, _ = trial_optimize_aniso(mask, levels, q, image, sigmas,
                                            lam0, pass1_kernel, trial_sweeps,
                                            seed)

    bit_width = max(1, math.ceil(math.log2(q)))
    bits = entropy.levels_to_bits(levels, bit_width)
    payload = entropy.bit_encode(bits, 2)
    blob = container.pack_rjip_a(width, height, q, r, lam0, scale0, payload)

    values = dequantize_array(levels, q)
    rec = inpaint_aniso(mask, values, np.full(mask.size, scale0 * sigma_base),
                        lam0, width, height)
    ops = _aniso_op_count(mask, scale0 * sigma_base, width, height)
    return EncodeResult(blob=blob, reconstruction=rec, mse=mse(rec, image),
                        op_count=ops,
                        params=RjipParams(r=r, q=q, mode="anisotropic",
                                          lam=lam0, sigma_scale=scale0))


def _aniso_op_count(mask: MaskedData, sigma: float, width, height) -> int:
    from .shepard_iso import clipped_window_ops, window_extent
    half = window_extent(sigma) // 2
    half1 = make_kernel(compute_sigma(mask.size, width, height)).half
    return (clipped_window_ops(mask.positions, half, width, height)
            + clipped_window_ops(mask.positions, half1, width, height))


def _decode_rjip_a(head: container.Header, reader) -> tuple[np.ndarray, int]:
    r, lam_fp, scale_fp = reader.unpack("<BHH")
    (plen,) = reader.unpack("<I")
    payload = reader.take(plen)
    lam = lam_fp / container.LAMBDA_SCALE
    scale = scale_fp / container.LAMBDA_SCALE
    mask = make_regular_mask(head.width, head.height, r)
    bit_width = max(1, math.ceil(math.log2(head.q)))
    bits = entropy.bit_decode(payload, mask.size * bit_width, 2)
    levels = entropy.bits_to_levels(bits, bit_width)
    if levels.max() > head.q - 1:
        raise container.ContainerError("decoded level out of range")
    sigma_base = compute_sigma(mask.size, head.width, head.height)
    values = dequantize_array(levels, head.q)
    rec = inpaint_aniso(mask, values, np.full(mask.size, scale * sigma_base),
                        lam, head.width, head.height)
    return rec, _aniso_op_count(mask, scale * sigma_base, head.width,
                                head.height)


def rjip_decode(data: bytes) -> np.ndarray:
    """Decode any regular-grid container (RJIP or RJIP-A)."""
    head, reader = container.read_header(data)
    if head.codec == container.CODEC_RJIP:
        rec, _ = _decode_rjip(head, reader)
    elif head.codec == container.CODEC_RJIP_A:
        rec, _ = _decode_rjip_a(head, reader)
    else:
        raise container.ContainerError(
            f"not a regular-grid codec: {container.CODEC_NAMES[head.codec]}")
    return rec


# ---------------------------------------------------------------------------
# Parameter search

@dataclass
class SearchOutcome:
    params: RjipParams
    result: EncodeResult
    feasible: bool


def _probe_encoder(image, mode: str, seed: int, search_effort: bool):
    if mode == "isotropic":
        def enc(r, q):
            return rjip_encode_fixed(image, r, q)
    else:
        def enc(r, q):
            return rjip_a_encode_fixed(
                image, r, q, seed=seed,
                alternations=1 if search_effort else 2,
                trial_sweeps=1)
    return enc


def search_params(image, target_ratio: float, mode: str = "isotropic",
                  seed: int = 0, max_iter: int = 12) -> SearchOutcome:
    """Nested golden-section over r (outer) and q (inner).

    Minimises MSE subject to the achieved compression ratio reaching the
    target within the 5% tolerance band; returns the best feasible probe, or
    the best-effort probe flagged infeasible when even r_max, q=2 cannot
    reach the target.
    """
    if target_ratio <= 1:
        raise ValueError("target_ratio must exceed 1")
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    ratio_floor = target_ratio * (1.0 - RATIO_TOLERANCE)
    r_max = max(2, min(64, min(width, height) // 2))
    encode = _probe_encoder(image, mode, seed, search_effort=True)

    probes: dict[tuple[int, int], EncodeResult] = {}

    def probe(r, q):
        key = (r, q)
        if key not in probes:
            probes[key] = encode(r, q)
        return probes[key]

    def score(res: EncodeResult) -> float:
        if res.ratio >= ratio_floor:
            return res.mse
        # infeasible: drive towards smaller files
        return 1e12 + (ratio_floor - res.ratio)

    def best_q_for(r):
        def inner(q):
            return score(probe(r, q))
        q_best, v = golden_section_int(inner, 2, 256, max_iter)
        return q_best, v

    def outer(r):
        return best_q_for(r)[1]

    r_best, _ = golden_section_int(outer, 1, r_max, max_iter)
    q_best, _ = best_q_for(r_best)
    # pick the overall best probed point (memoised probes include all pairs)
    feasible_probes = {k: v for k, v in probes.items()
                       if v.ratio >= ratio_floor}
    if feasible_probes:
        key = min(feasible_probes, key=lambda k: (feasible_probes[k].mse, k))
        res = feasible_probes[key]
        feasible = True
    else:
        key = max(probes, key=lambda k: (probes[k].ratio, k))
        res = probes[key]
        feasible = False
    if mode == "anisotropic":
        # redo the chosen point at full effort
        final = rjip_a_encode_fixed(image, key[0], key[1], seed=seed,
                                    alternations=2, trial_sweeps=2)
        if final.ratio >= ratio_floor and (not feasible
                                           or final.mse <= res.mse * 1.25):
            res = final
    return SearchOutcome(params=res.params, result=res, feasible=feasible)

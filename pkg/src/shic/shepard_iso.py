"""Isotropic Shepard inpainting with truncated Gaussian weights.

Reconstruction is normalised weighted averaging of the stored pixels: every
mask point spreads its value into a truncated Gaussian window, accumulated
into a value map v and a weight map w, and the inpainted image is v/w.
The Gaussian standard deviation adapts to the mask density so that the
truncated windows cover the whole image for reasonable masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import build_iso_table, iso_accumulate
from .image import MaskedData


def compute_sigma(mask_count: int, width: int, height: int) -> float:
    """Density-adapted standard deviation sqrt(w*h / (pi * |K|))."""
    if mask_count < 1:
        raise ValueError("mask_count must be >= 1")
    return math.sqrt((width * height) / (math.pi * mask_count))


def gaussian_weight(dx: float, dy: float, sigma: float) -> float:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return math.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))


def window_extent(sigma: float) -> int:
    """Truncation parameter L: window side is L+1, half-width L/2.

    L = ceil(4*sigma), bumped to the next even number when odd so the
    (L+1)-sided window is odd and centres symmetrically on the mask point.
    """
    ell = math.ceil(4.0 * sigma)
    if ell % 2 == 1:
        ell += 1
    return ell


@dataclass
class IsoKernel:
    """Precomputed truncated Gaussian weight table for one sigma."""

    sigma: float
    half: int                 # window spans offsets [-half, half] on each axis
    table: np.ndarray         # (2*half+1, 2*half+1) float64, table[half, half] = 1

    @property
    def side(self) -> int:
        return 2 * self.half + 1


def make_kernel(sigma: float) -> IsoKernel:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    half = window_extent(sigma) // 2
    table = build_iso_table(float(sigma), half)
    return IsoKernel(sigma=float(sigma), half=half, table=table)


@dataclass
class AccumulationMaps:
    """Per-pixel value and weight accumulators; reconstruction is v/w.

    ops counts weight evaluations/accumulations (clipped window pixels), the
    portable cost proxy used by the scaling studies.
    """

    v: np.ndarray
    w: np.ndarray
    ops: int = 0

    def copy(self) -> "AccumulationMaps":
        return AccumulationMaps(self.v.copy(), self.w.copy(), self.ops)


def accumulate(mask: MaskedData, values: np.ndarray, kernel: IsoKernel,
               width: int, height: int) -> AccumulationMaps:
    """Accumulate every mask point's truncated Gaussian contribution,
    visiting points in canonical raster order (the determinism contract)."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    xs = mask.positions[:, 0].astype(np.int64)
    ys = mask.positions[:, 1].astype(np.int64)
    v, w, ops = iso_accumulate(xs, ys, values, kernel.table, kernel.half,
                               width, height)
    return AccumulationMaps(v=v, w=w, ops=int(ops))


def accumulate_gather(mask: MaskedData, values: np.ndarray, kernel: IsoKernel,
                      width: int, height: int) -> AccumulationMaps:
    """Vectorised gather over window offsets in raster order.

    Reproduces the canonical point-by-point scatter bit-exactly: at each
    pixel the surviving contributions arrive in mask raster order, and the
    interleaved zero terms do not change IEEE sums. Kept as an independent
    implementation of the accumulation contract.
    """
    values = np.asarray(values, dtype=np.float64)
    ind = np.zeros((height, width), dtype=np.float64)
    ind[mask.positions[:, 1], mask.positions[:, 0]] = 1.0
    sparse = np.zeros((height, width), dtype=np.float64)
    sparse[mask.positions[:, 1], mask.positions[:, 0]] = values

    v = np.zeros((height, width), dtype=np.float64)
    w = np.zeros((height, width), dtype=np.float64)
    h = kernel.half
    for dy in range(-h, h + 1):
        ty0, ty1 = max(0, -dy), min(height, height - dy)
        sy0, sy1 = ty0 + dy, ty1 + dy
        if ty0 >= ty1:
            continue
        for dx in range(-h, h + 1):
            tx0, tx1 = max(0, -dx), min(width, width - dx)
            if tx0 >= tx1:
                continue
            g = kernel.table[dy + h, dx + h]
            sx0, sx1 = tx0 + dx, tx1 + dx
            w[ty0:ty1, tx0:tx1] += g * ind[sy0:sy1, sx0:sx1]
            v[ty0:ty1, tx0:tx1] += g * sparse[sy0:sy1, sx0:sx1]

    ops = int(clipped_window_ops(mask.positions, kernel.half, width, height))
    return AccumulationMaps(v=v, w=w, ops=ops)


def clipped_window_ops(positions: np.ndarray, half: int, width: int,
                       height: int) -> int:
    """Total window pixels over all mask points, clipped at image borders."""
    x = positions[:, 0].astype(np.int64)
    y = positions[:, 1].astype(np.int64)
    wx = np.minimum(x + half, width - 1) - np.maximum(x - half, 0) + 1
    wy = np.minimum(y + half, height - 1) - np.maximum(y - half, 0) + 1
    return int(np.sum(wx * wy))


def hole_fill_value(values: np.ndarray) -> float:
    return float(np.mean(values))


def reconstruct(maps: AccumulationMaps, hole_value: float) -> np.ndarray:
    """v/w where covered; hole pixels (w == 0) get the fallback value."""
    covered = maps.w > 0.0
    out = np.full(maps.w.shape, hole_value, dtype=np.float64)
    out[covered] = maps.v[covered] / maps.w[covered]
    np.clip(out, 0.0, 255.0, out=out)
    return out


def inpaint_iso(mask: MaskedData, values: np.ndarray, sigma: float,
                width: int, height: int) -> np.ndarray:
    kernel = make_kernel(sigma)
    maps = accumulate(mask, values, kernel, width, height)
    return reconstruct(maps, hole_fill_value(np.asarray(values, dtype=np.float64)))

"""Experiment harness: rate-distortion sweeps, the disk comparison, and
operation-count scaling studies, with CSV emission.

Absolute runtimes are hardware-bound; the portable cost proxy is op_count,
the number of accumulated weight operations, and runtime claims are reduced
to orderings and log-log slopes.
"""

from __future__ import annotations

import io
import math
import time
from dataclasses import dataclass

import numpy as np

from . import container
from .homdiff import SolverConfig, hom_trial_tonal, inpaint_hom
from .image import DiskSpec, make_disk, make_regular_mask, mse, \
    sample_values, ssim
from .rjip import rjip_a_encode_fixed, rjip_decode, rjip_encode_fixed, \
    search_params
from .search import golden_section_real
from .shepard_aniso import inpaint_aniso, voronoi_areas
from .shepard_iso import compute_sigma, make_kernel
from .subdivision import search_split_error, subdivide_decode, \
    subdivide_encode
from .tonal import (dequantize_array, make_tonal_state, quantize_array,
                    tonal_optimize_iso, trial_optimize_aniso)

CSV_HEADER = ("codec,target_ratio,achieved_ratio,mse,ssim,encode_s,"
              "decode_s,op_count,feasible")

CODECS = ("rjip", "rjip-a", "tree-iso", "tree-aniso")


@dataclass
class RdPoint:
    codec: str
    target_ratio: float
    achieved_ratio: float
    mse: float
    ssim: float
    encode_s: float
    decode_s: float
    op_count: int
    feasible: bool

    def csv_row(self) -> str:
        return (f"{self.codec},{self.target_ratio:.6g},"
                f"{self.achieved_ratio:.6f},{self.mse:.6f},{self.ssim:.6f},"
                f"{self.encode_s:.3f},{self.decode_s:.3f},{self.op_count},"
                f"{'yes' if self.feasible else 'no'}")


def decode_any(blob: bytes) -> np.ndarray:
    head, _ = container.read_header(blob)
    if head.codec in (container.CODEC_RJIP, container.CODEC_RJIP_A):
        return rjip_decode(blob)
    return subdivide_decode(blob)


def encode_with_target(image, codec: str, target_ratio: float, seed: int = 0):
    """Search codec parameters for a target ratio; returns (result, feasible)."""
    if codec == "rjip":
        out = search_params(image, target_ratio, "isotropic", seed)
        return out.result, out.feasible
    if codec == "rjip-a":
        out = search_params(image, target_ratio, "anisotropic", seed)
        return out.result, out.feasible
    if codec == "tree-iso":
        _, res, feasible = search_split_error(image, target_ratio,
                                              "isotropic", seed)
        return res, feasible
    if codec == "tree-aniso":
        _, res, feasible = search_split_error(image, target_ratio,
                                              "anisotropic", seed)
        return res, feasible
    raise ValueError(f"unknown codec {codec!r}")


def rd_sweep(image, codec: str, targets, seed: int = 0) -> list[RdPoint]:
    """One RdPoint per target ratio, in target order.

    The achieved ratio is always recomputed from the actual compressed
    bytes, and the distortion from an actual decode of those bytes.
    """
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    points = []
    for target in targets:
        t0 = time.perf_counter()
        result, feasible = encode_with_target(image, codec, float(target),
                                              seed)
        enc_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        rec = decode_any(result.blob)
        dec_s = time.perf_counter() - t0
        achieved = width * height / len(result.blob)
        points.append(RdPoint(codec=codec, target_ratio=float(target),
                              achieved_ratio=achieved, mse=mse(rec, image),
                              ssim=ssim(rec, image), encode_s=enc_s,
                              decode_s=dec_s, op_count=result.op_count,
                              feasible=feasible))
    return points


def write_csv(points, stream=None) -> str:
    own = stream is None
    if own:
        stream = io.StringIO()
    stream.write(CSV_HEADER + "\n")
    for p in points:
        stream.write(p.csv_row() + "\n")
    return stream.getvalue() if own else ""


# ---------------------------------------------------------------------------
# Disk comparison

DISK_SPEC = DiskSpec(size=400, radius=130.0, inside=255.0, outside=0.0)
DISK_GRID = 3


def disk_experiment(seed: int = 0, spec: DiskSpec = DISK_SPEC,
                    verbose: bool = False) -> dict:
    """Inpainting-operator comparison on the synthetic disk.

    A regular grid at spacing 3 (11.2% density) feeds three operators:
    isotropic Shepard with closed-form tonal optimisation, anisotropic
    Shepard with (lambda, p) tuned by golden-section around trial tonal
    optimisation, and homogeneous diffusion with trial tonal optimisation.
    Returns per-method MSE and timings.
    """
    img = make_disk(spec)
    height, width = img.shape
    mask = make_regular_mask(width, height, DISK_GRID)
    q = 256
    report: dict = {"mask_points": mask.size,
                    "density": mask.size / (width * height)}

    t0 = time.perf_counter()
    sigma = compute_sigma(mask.size, width, height)
    state = make_tonal_state(img, mask, q, make_kernel(sigma))
    tonal_optimize_iso(state, 5)
    rec_iso = state.reconstruction()
    report["isotropic_mse"] = mse(rec_iso, img)
    report["isotropic_s"] = time.perf_counter() - t0
    if verbose:
        print(f"isotropic: MSE {report['isotropic_mse']:.2f}")

    t0 = time.perf_counter()
    report["anisotropic_mse"], rec_aniso = _disk_aniso(img, mask, q, seed)
    report["anisotropic_s"] = time.perf_counter() - t0
    if verbose:
        print(f"anisotropic: MSE {report['anisotropic_mse']:.2f}")

    t0 = time.perf_counter()
    levels = quantize_array(sample_values(img, mask), q)
    _, rec_hom = hom_trial_tonal(mask, levels, q, img, sweeps=2, seed=seed)
    report["homogeneous_mse"] = mse(rec_hom, img)
    report["homogeneous_s"] = time.perf_counter() - t0
    if verbose:
        print(f"homogeneous: MSE {report['homogeneous_mse']:.2f}")

    report["reconstructions"] = {"isotropic": rec_iso,
                                 "anisotropic": rec_aniso,
                                 "homogeneous": rec_hom}
    return report


def _disk_aniso(img, mask, q, seed, alternations: int = 2):
    height, width = img.shape
    levels = quantize_array(sample_values(img, mask), q)
    areas = voronoi_areas(mask, width, height)
    pass1_kernel = make_kernel(compute_sigma(mask.size, width, height))
    lam, p = 8.0, 1.0

    def probe(lam_x, p_x, lv):
        sig = np.log1p(areas.astype(np.float64)) ** p_x
        u = inpaint_aniso(mask, dequantize_array(lv, q), sig, lam_x, width,
                          height)
        return mse(u, img)

    for it in range(alternations):
        p, _ = golden_section_real(lambda x: probe(lam, x, levels),
                                   0.25, 2.5, 8)
        lam, _ = golden_section_real(lambda x: probe(x, p, levels),
                                     0.5, 64.0, 8)
        sig = np.log1p(areas.astype(np.float64)) ** p
        levels, _, _ = trial_optimize_aniso(mask, levels, q, img, sig, lam,
                                            pass1_kernel, 1, seed + it)
    sig = np.log1p(areas.astype(np.float64)) ** p
    rec = inpaint_aniso(mask, dequantize_array(levels, q), sig, lam, width,
                        height)
    return mse(rec, img), rec


# ---------------------------------------------------------------------------
# Scaling study

def downsample2(image) -> np.ndarray:
    """2x block-mean downsampling (trailing odd row/column cropped)."""
    img = np.asarray(image, dtype=np.float64)
    h, w = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    img = img[:h, :w]
    return (img[0::2, 0::2] + img[0::2, 1::2] + img[1::2, 0::2]
            + img[1::2, 1::2]) / 4.0


def scaling_study(image, levels: int = 4, seed: int = 0, r: int = 4,
                  q: int = 32, include_hom: bool = True,
                  verbose: bool = False) -> dict:
    """Encode cost versus pixel count on downsampled versions of one image.

    Every scale is encoded with fixed r and q by RJIP, RJIP-A and (optionally)
    the homogeneous-diffusion comparator with full-solve trial tonal
    optimisation. Reports wall times, op counts, and the RJIP op-count
    log-log slope against pixel count.
    """
    if levels < 3:
        raise ValueError("need at least 3 scales")
    image = np.asarray(image, dtype=np.float64)
    scales = [image]
    for _ in range(levels - 1):
        scales.append(downsample2(scales[-1]))
    scales.reverse()  # smallest first

    rows = []
    for img in scales:
        height, width = img.shape
        row = {"pixels": width * height, "width": width, "height": height}
        t0 = time.perf_counter()
        res = rjip_encode_fixed(img, r, q)
        row["rjip_s"] = time.perf_counter() - t0
        row["rjip_ops"] = res.op_count
        t0 = time.perf_counter()
        res_a = rjip_a_encode_fixed(img, r, q, seed=seed, alternations=1,
                                    trial_sweeps=1)
        row["rjip_a_s"] = time.perf_counter() - t0
        row["rjip_a_ops"] = res_a.op_count
        if include_hom:
            t0 = time.perf_counter()
            _hom_codec_run(img, r, q, seed, row)
            row["hom_s"] = time.perf_counter() - t0
        rows.append(row)
        if verbose:
            print(row)

    logs = np.log([row["pixels"] for row in rows])
    ops = np.log([row["rjip_ops"] for row in rows])
    slope = float(np.polyfit(logs, ops, 1)[0])
    return {"rows": rows, "rjip_op_slope": slope}


def _hom_codec_run(img, r, q, seed, row) -> None:
    """Regular-mask pipeline with homogeneous diffusion: quantise and run
    generic trial tonal optimisation where every probe is a full solve."""
    from .homdiff import make_inpaint_fn
    from .tonal import tonal_optimize_trial
    height, width = img.shape
    mask = make_regular_mask(width, height, r)
    levels = quantize_array(sample_values(img, mask), q)
    counter = [0]
    fn = make_inpaint_fn(mask, width, height,
                         SolverConfig(tolerance=1e-4), op_counter=counter)
    levels = tonal_optimize_trial(levels, fn, q, img, sweeps=1, seed=seed)
    rec = inpaint_hom(mask, dequantize_array(levels, q), width, height,
                      SolverConfig())
    row["hom_mse"] = mse(rec, img)
    row["hom_ops"] = counter[0]


def scaling_csv(report: dict) -> str:
    out = ["pixels,width,height,rjip_s,rjip_ops,rjip_a_s,rjip_a_ops,"
           "hom_s,hom_ops"]
    for row in report["rows"]:
        out.append(f"{row['pixels']},{row['width']},{row['height']},"
                   f"{row['rjip_s']:.3f},{row['rjip_ops']},"
                   f"{row['rjip_a_s']:.3f},{row['rjip_a_ops']},"
                   f"{row.get('hom_s', float('nan')):.3f},"
                   f"{row.get('hom_ops', 0)}")
    return "\n".join(out) + "\n"

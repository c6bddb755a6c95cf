"""Anisotropic Shepard inpainting with oriented, diffusivity-shrunken kernels.

The pipeline has three passes: an isotropic pre-inpainting with the global
density-adapted sigma, derivative estimation on that image, and a final
accumulation with per-mask-point oriented Gaussians. The kernel of a point is
elongated along the local isophote (orthogonal to the gradient) and shrunk
across it by a rational Perona-Malik diffusivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .image import MaskedData, _as_image
from .shepard_iso import (AccumulationMaps, compute_sigma, hole_fill_value,
                          inpaint_iso, reconstruct, window_extent)


@dataclass
class GradientField:
    fx: np.ndarray
    fy: np.ndarray


def compute_gradients(image) -> GradientField:
    """Central-difference derivatives (grid spacing 1), one-sided at borders."""
    image = _as_image(image)
    if image.shape[0] < 2 or image.shape[1] < 2:
        raise ValueError("image must be at least 2x2 for derivatives")
    fy, fx = np.gradient(image)
    return GradientField(fx=fx, fy=fy)


def diffusivity(s2: float, lam: float) -> float:
    """Rational Perona-Malik diffusivity 1/(1 + s2/lambda^2)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if lam == math.inf:
        return 1.0
    return 1.0 / (1.0 + s2 / (lam * lam))


@dataclass
class OrientedKernel:
    """Oriented Gaussian weight exp(-(alpha dx^2 + 2 beta dx dy + gamma dy^2))."""

    theta: float
    sigma1: float
    sigma2: float
    alpha: float
    beta: float
    gamma: float

    @property
    def half(self) -> int:
        return window_extent(self.sigma1) // 2


def kernel_from_gradient(fx: float, fy: float, sigma: float,
                         lam: float) -> OrientedKernel:
    """Oriented kernel for one mask point from its local gradient.

    sigma1 = sigma along the isophote, sigma2 = sigma * sqrt(g(|grad|^2))
    across it; theta is the angle of the isophote direction (fy, -fx),
    computed with the two-argument arctangent so fy = 0 is no special case.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    theta, sig2, alpha, beta, gamma = _kernels.oriented_params(
        float(fx), float(fy), float(sigma), float(lam))
    return OrientedKernel(theta=theta, sigma1=float(sigma), sigma2=sig2,
                          alpha=alpha, beta=beta, gamma=gamma)


def oriented_weight(kernel: OrientedKernel, dx: float, dy: float) -> float:
    return _kernels.oriented_weight_value(float(dx), float(dy), kernel.sigma1,
                                          kernel.alpha, kernel.beta,
                                          kernel.gamma)


# ---------------------------------------------------------------------------
# Voronoi-adaptive local sigma

@dataclass
class LocalSigmaField:
    sigma_k: np.ndarray        # per mask point
    voronoi_area: np.ndarray   # cell pixel count per mask point


def voronoi_areas(mask: MaskedData, width: int, height: int) -> np.ndarray:
    """Discrete Voronoi cell areas (nearest centre, ties to lowest index)."""
    xs = mask.positions[:, 0].astype(np.int64)
    ys = mask.positions[:, 1].astype(np.int64)
    spacing = math.sqrt(width * height / len(xs))
    bucket = max(2, min(64, int(spacing) + 1))
    owner = _kernels.voronoi_owners(xs, ys, width, height, bucket)
    areas = np.bincount(owner.ravel(), minlength=len(xs))
    return areas.astype(np.int64)


def voronoi_sigmas(mask: MaskedData, width: int, height: int,
                   p: float) -> LocalSigmaField:
    """Per-point sigma_k = (ln(1 + A_k))^p from the Voronoi cell area A_k."""
    if p < 0:
        raise ValueError("exponent p must be >= 0")
    areas = voronoi_areas(mask, width, height)
    sigma_k = np.log1p(areas.astype(np.float64)) ** p
    return LocalSigmaField(sigma_k=sigma_k, voronoi_area=areas)


# ---------------------------------------------------------------------------
# Inpainting with per-point kernels

def _per_point_sigmas(sigma_per_point, n: int) -> np.ndarray:
    s = np.asarray(sigma_per_point, dtype=np.float64)
    if s.ndim == 0:
        s = np.full(n, float(s))
    if s.shape != (n,):
        raise ValueError("need one sigma per mask point")
    if np.any(s <= 0):
        raise ValueError("per-point sigma must be positive")
    return s


def point_kernel_params(fx, fy, sigmas, lam):
    """Oriented-kernel parameters for all mask points at once."""
    return _kernels.oriented_params_batch(
        np.ascontiguousarray(fx, dtype=np.float64),
        np.ascontiguousarray(fy, dtype=np.float64),
        np.ascontiguousarray(sigmas, dtype=np.float64), float(lam))


def halves_for_sigmas(sigmas: np.ndarray) -> np.ndarray:
    return np.array([window_extent(s) // 2 for s in sigmas], dtype=np.int64)


def accumulate_aniso(mask: MaskedData, values, sigmas, alphas, betas, gammas,
                     width: int, height: int) -> AccumulationMaps:
    xs = mask.positions[:, 0].astype(np.int64)
    ys = mask.positions[:, 1].astype(np.int64)
    vals = np.asarray(values, dtype=np.float64)
    halves = halves_for_sigmas(sigmas)
    v, w, ops = _kernels.aniso_accumulate(xs, ys, vals, sigmas, alphas,
                                          betas, gammas, halves, width, height)
    return AccumulationMaps(v=v, w=w, ops=int(ops))


def gradients_at_points(image, mask: MaskedData) -> tuple[np.ndarray, np.ndarray]:
    gf = compute_gradients(image)
    x, y = mask.positions[:, 0], mask.positions[:, 1]
    return gf.fx[y, x].astype(np.float64), gf.fy[y, x].astype(np.float64)


def inpaint_aniso(mask: MaskedData, values, sigma_per_point, lam: float,
                  width: int, height: int,
                  pass1: np.ndarray | None = None) -> np.ndarray:
    """Three-pass anisotropic Shepard inpainting.

    The derivative source (pass 1) is the isotropic inpainting with the
    global density-adapted sigma; it may be supplied to avoid recomputation,
    in which case it must be exactly that image.
    """
    values = np.asarray(values, dtype=np.float64)
    sigmas = _per_point_sigmas(sigma_per_point, mask.size)
    if pass1 is None:
        pass1 = inpaint_iso(mask, values, compute_sigma(mask.size, width, height),
                            width, height)
    fx, fy = gradients_at_points(pass1, mask)
    alphas, betas, gammas = point_kernel_params(fx, fy, sigmas, lam)
    maps = accumulate_aniso(mask, values, sigmas, alphas, betas, gammas,
                            width, height)
    return reconstruct(maps, hole_fill_value(values))


def inpaint_iso_local(mask: MaskedData, values, sigma_per_point,
                      width: int, height: int) -> np.ndarray:
    """Isotropic inpainting with a per-point sigma (no orientation)."""
    values = np.asarray(values, dtype=np.float64)
    sigmas = _per_point_sigmas(sigma_per_point, mask.size)
    alphas = 1.0 / (2.0 * sigmas * sigmas)
    betas = np.zeros_like(sigmas)
    maps = accumulate_aniso(mask, values, sigmas, alphas, betas, alphas.copy(),
                            width, height)
    return reconstruct(maps, hole_fill_value(values))

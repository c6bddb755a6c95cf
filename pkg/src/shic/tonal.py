"""Quantisation and tonal optimisation.

Stored grey values are quantised to q uniform levels. Tonal optimisation
then deliberately moves the stored levels away from the source samples so
that the global reconstruction error drops. The global-sigma isotropic case
has a closed-form per-point update; all other operators fall back to seeded
trial-and-error over neighbouring levels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .image import MaskedData, mse
from .shepard_iso import (AccumulationMaps, IsoKernel, accumulate,
                          hole_fill_value, make_kernel, reconstruct)

DEFAULT_CLOSED_FORM_SWEEPS = 5
DEFAULT_TRIAL_SWEEPS = 3


def quantize(f: float, q: int) -> int:
    """Uniform scalar quantisation of f in [0, 255] to a level in {0..q-1}."""
    if not 2 <= q <= 256:
        raise ValueError("q must be in [2, 256]")
    return min(int(f * q / 256.0), q - 1)


def dequantize(level: int, q: int) -> float:
    """Midpoint of the level's tonal subinterval, clamped to [0, 255]."""
    if not 0 <= level <= q - 1:
        raise ValueError(f"level {level} out of range for q={q}")
    return min(255.0, max(0.0, (level + 0.5) * 256.0 / q))


def quantize_array(values, q: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    levels = np.minimum((values * q / 256.0).astype(np.int64), q - 1)
    return np.maximum(levels, 0)


def dequantize_array(levels, q: int) -> np.ndarray:
    return np.clip((np.asarray(levels, dtype=np.float64) + 0.5) * 256.0 / q,
                   0.0, 255.0)


@dataclass
class TonalState:
    """Mutable optimisation state for the global-sigma isotropic operator.

    The accumulation maps are kept incrementally consistent with the current
    dequantised levels; rebuild() restores exact fresh-accumulation values.
    """

    mask: MaskedData
    levels: np.ndarray
    q: int
    kernel: IsoKernel
    ground_truth: np.ndarray
    maps: AccumulationMaps = field(init=False)

    def __post_init__(self):
        self.levels = np.ascontiguousarray(self.levels, dtype=np.int64)
        self.ground_truth = np.ascontiguousarray(self.ground_truth,
                                                 dtype=np.float64)
        self.rebuild()

    @property
    def values(self) -> np.ndarray:
        return dequantize_array(self.levels, self.q)

    def rebuild(self) -> None:
        h, w = self.ground_truth.shape
        self.maps = accumulate(self.mask, self.values, self.kernel, w, h)

    def reconstruction(self) -> np.ndarray:
        return reconstruct(self.maps, hole_fill_value(self.values))

    def current_mse(self) -> float:
        return mse(self.reconstruction(), self.ground_truth)


def make_tonal_state(image, mask: MaskedData, q: int,
                     kernel: IsoKernel) -> TonalState:
    from .image import sample_values
    levels = quantize_array(sample_values(image, mask), q)
    return TonalState(mask=mask, levels=levels, q=q, kernel=kernel,
                      ground_truth=np.asarray(image, dtype=np.float64))


def tonal_error_iso(state: TonalState, i: int, candidate: float) -> float:
    """Window squared error after hypothetically setting point i to candidate.

    Evaluates the local error without re-inpainting, using the accumulation
    maps and the known single-point contribution delta.
    """
    xc = int(state.mask.positions[i, 0])
    yc = int(state.mask.positions[i, 1])
    delta = float(candidate) - float(state.values[i])
    _, e_new = _kernels.window_sse_pair(xc, yc, delta, state.maps.v,
                                        state.maps.w, state.kernel.table,
                                        state.kernel.half, state.ground_truth)
    return float(e_new)


def tonal_closed_form_iso(state: TonalState, i: int) -> float:
    """Unquantised candidate minimising the window error at mask point i."""
    xc = int(state.mask.positions[i, 0])
    yc = int(state.mask.positions[i, 1])
    return float(_kernels.closed_form_value(xc, yc, float(state.values[i]),
                                            state.maps.v, state.maps.w,
                                            state.kernel.table,
                                            state.kernel.half,
                                            state.ground_truth))


def tonal_optimize_iso(state: TonalState,
                       sweeps: int = DEFAULT_CLOSED_FORM_SWEEPS) -> TonalState:
    """Closed-form tonal sweeps over all mask points in canonical order.

    Each candidate is projected to the nearest quantised level and committed
    only when the local (hence global) squared error does not increase. The
    maps are updated incrementally and rebuilt once per sweep to stop drift.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    xs = state.mask.positions[:, 0].astype(np.int64)
    ys = state.mask.positions[:, 1].astype(np.int64)
    values = state.values.copy()
    for _ in range(sweeps):
        _kernels.closed_form_sweeps(xs, ys, state.levels, values,
                                    state.maps.v, state.maps.w,
                                    state.kernel.table, state.kernel.half,
                                    state.ground_truth, state.q, 1)
        state.rebuild()
        values = state.values.copy()
    return state


def tonal_optimize_trial(levels, inpaint_fn, q: int, truth, sweeps: int,
                         seed: int) -> np.ndarray:
    """Generic trial-and-error tonal optimisation.

    Visits mask points in a seeded pseudo-random permutation per sweep, tries
    the neighbouring levels, and keeps a change iff the global MSE of a full
    re-inpainting strictly decreases. inpaint_fn maps the dequantised value
    vector to a reconstruction. This is the correctness baseline; operator-
    specific fast paths must make identical decisions.
    """
    levels = np.ascontiguousarray(levels, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.float64)
    rng = np.random.default_rng(seed)
    values = dequantize_array(levels, q)
    best = mse(inpaint_fn(values), truth)
    for _ in range(sweeps):
        for i in rng.permutation(len(levels)):
            for step in (1, -1):
                lvl = levels[i] + step
                if not 0 <= lvl <= q - 1:
                    continue
                old_lvl = levels[i]
                levels[i] = lvl
                trial = mse(inpaint_fn(dequantize_array(levels, q)), truth)
                if trial < best:
                    best = trial
                    break
                levels[i] = old_lvl
    return levels


DEFAULT_TRIAL_WORK_BUDGET = 1_500_000_000


def trial_optimize_local_iso(mask: MaskedData, levels, q: int, truth,
                             sigmas, sweeps: int, seed: int,
                             work_budget: int = DEFAULT_TRIAL_WORK_BUDGET):
    """Fast trial optimisation for per-point isotropic kernels.

    Same visit order and acceptance rule as tonal_optimize_trial; the MSE
    change is evaluated by re-inpainting the visited point's window from
    scratch. A sweep stops early (deterministically) when its accumulated
    pixel work exceeds work_budget. Returns (levels, maps, reconstruction).
    """
    truth = np.asarray(truth, dtype=np.float64)
    height, width = truth.shape
    levels = np.ascontiguousarray(levels, dtype=np.int64)
    xs = mask.positions[:, 0].astype(np.int64)
    ys = mask.positions[:, 1].astype(np.int64)
    sigmas = np.ascontiguousarray(sigmas, dtype=np.float64)
    values = dequantize_array(levels, q)
    alphas = 1.0 / (2.0 * sigmas * sigmas)
    betas = np.zeros_like(sigmas)
    gammas = alphas.copy()
    halves = np.array([_kernels.iso_half_width(s) for s in sigmas],
                      dtype=np.int64)
    v, w, _ = _kernels.aniso_accumulate(xs, ys, values, sigmas, alphas, betas,
                                        gammas, halves, width, height)
    u = reconstruct(AccumulationMaps(v, w), hole_fill_value(values))
    rng = np.random.default_rng(seed)
    for _ in range(sweeps):
        order = rng.permutation(len(levels)).astype(np.int64)
        _kernels.trial_sweep_local_iso(order, xs, ys, levels, values, q,
                                       sigmas, alphas, betas, gammas, halves,
                                       v, w, u, truth, work_budget)
    maps = AccumulationMaps(v, w)
    return levels, maps, reconstruct(maps, hole_fill_value(values))


def trial_optimize_aniso(mask: MaskedData, levels, q: int, truth, sigmas,
                         lam: float, pass1_kernel: IsoKernel, sweeps: int,
                         seed: int,
                         work_budget: int = DEFAULT_TRIAL_WORK_BUDGET):
    """Fast trial optimisation for the anisotropic operator.

    Maintains the pass-1 isotropic image, the per-point derivative kernels,
    and the anisotropic maps; each candidate re-inpaints the union of the
    windows whose kernels the change can touch. Returns (levels, maps,
    reconstruction).
    """
    truth = np.asarray(truth, dtype=np.float64)
    height, width = truth.shape
    levels = np.ascontiguousarray(levels, dtype=np.int64)
    xs = mask.positions[:, 0].astype(np.int64)
    ys = mask.positions[:, 1].astype(np.int64)
    sigmas = np.ascontiguousarray(sigmas, dtype=np.float64)
    values = dequantize_array(levels, q)

    maps1 = accumulate(mask, values, pass1_kernel, width, height)
    u1 = reconstruct(maps1, hole_fill_value(values))
    from .shepard_aniso import gradients_at_points
    fxs, fys = gradients_at_points(u1, mask)
    alphas, betas, gammas = _kernels.oriented_params_batch(fxs, fys, sigmas,
                                                           float(lam))
    halves = np.array([_kernels.iso_half_width(s) for s in sigmas],
                      dtype=np.int64)
    v, w, _ = _kernels.aniso_accumulate(xs, ys, values, sigmas, alphas, betas,
                                        gammas, halves, width, height)
    u = reconstruct(AccumulationMaps(v, w), hole_fill_value(values))

    rng = np.random.default_rng(seed)
    for _ in range(sweeps):
        order = rng.permutation(len(levels)).astype(np.int64)
        _kernels.trial_sweep_aniso(order, xs, ys, levels, values, q,
                                   float(lam), sigmas,
                                   maps1.v, maps1.w, u1, pass1_kernel.table,
                                   pass1_kernel.half,
                                   fxs, fys, alphas, betas, gammas, halves,
                                   v, w, u, truth, work_budget)
    maps = AccumulationMaps(v, w)
    return levels, maps, reconstruct(maps, hole_fill_value(values))

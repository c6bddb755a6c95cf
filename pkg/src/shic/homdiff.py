"""Homogeneous diffusion inpainting baseline.

Solves the discrete Laplace equation on the unknown pixels (5-point stencil,
unit grid) with Dirichlet conditions at the mask and mirrored image borders,
via unpreconditioned conjugate gradients. Deliberately kept simple: this is
the reference competitor, not a tuned solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, spsolve

from .image import MaskedData, mse
from .tonal import dequantize_array


@dataclass
class SolverConfig:
    tolerance: float = 1e-6
    max_iterations: int = 20000

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, tolerance: float):
        super().__init__(
            f"conjugate gradients stalled at relative residual {residual:.3e}"
            f" (tolerance {tolerance:.1e})")
        self.residual = residual


def _laplace_system(mask: MaskedData, values: np.ndarray, width: int,
                    height: int):
    """SPD system for the unknown pixels with mirrored outer boundary."""
    known = mask.indicator
    unknown = ~known
    idx = -np.ones((height, width), dtype=np.int64)
    idx[unknown] = np.arange(int(unknown.sum()))
    kv = np.zeros((height, width))
    kv[mask.positions[:, 1], mask.positions[:, 0]] = values

    rows, cols, data = [], [], []
    n = int(unknown.sum())
    b = np.zeros(n)
    uy, ux = np.nonzero(unknown)
    for y, x in zip(uy, ux):
        i = idx[y, x]
        deg = 0
        for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
            if not (0 <= ny < height and 0 <= nx < width):
                continue  # mirrored: the ghost neighbour cancels
            deg += 1
            if known[ny, nx]:
                b[i] += kv[ny, nx]
            else:
                rows.append(i)
                cols.append(idx[ny, nx])
                data.append(-1.0)
        rows.append(i)
        cols.append(i)
        data.append(float(deg))
    A = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    return A, b, idx, unknown, kv


def residual_norm(A, x, b) -> float:
    bn = float(np.linalg.norm(b))
    if bn == 0.0:
        return float(np.linalg.norm(A @ x))
    return float(np.linalg.norm(b - A @ x)) / bn


def inpaint_hom(mask: MaskedData, values, width: int, height: int,
                config: SolverConfig | None = None,
                x0: np.ndarray | None = None,
                stats: dict | None = None) -> np.ndarray:
    """Steady-state homogeneous diffusion inpainting.

    Unknown pixels are initialised with the mean mask value unless a warm
    start x0 (a full image) is given. The returned solution is checked
    against an independently recomputed residual.
    """
    if config is None:
        config = SolverConfig()
    values = np.asarray(values, dtype=np.float64)
    A, b, idx, unknown, kv = _laplace_system(mask, values, width, height)
    n = int(unknown.sum())
    out = kv.copy()
    if n == 0:
        return out
    if x0 is None:
        start = np.full(n, float(np.mean(values)))
    else:
        start = np.asarray(x0, dtype=np.float64)[unknown]
    iters = [0]

    def _count(_):
        iters[0] += 1

    x, _ = cg(A, b, x0=start, rtol=config.tolerance, atol=0.0,
              maxiter=config.max_iterations, callback=_count)
    res = residual_norm(A, x, b)
    if res > config.tolerance * 1.001:
        raise ConvergenceError(res, config.tolerance)
    if stats is not None:
        stats["iterations"] = iters[0]
        stats["residual"] = res
        stats["unknowns"] = n
    out[unknown] = x
    return out


def make_inpaint_fn(mask: MaskedData, width: int, height: int,
                    config: SolverConfig | None = None,
                    op_counter: list | None = None):
    """Full-solve inpainting closure with warm starts between calls.

    This is the plain trial-and-error comparator: every tonal probe pays for
    a complete diffusion solve, as in the simple iterative adjustment scheme.
    """
    state = {"last": None}

    def fn(values):
        stats = {}
        u = inpaint_hom(mask, values, width, height, config, x0=state["last"],
                        stats=stats)
        state["last"] = u
        if op_counter is not None:
            op_counter[0] += 5 * stats.get("iterations", 0) * stats.get(
                "unknowns", 0)
        return u

    return fn


# ---------------------------------------------------------------------------
# Fast trial-and-error tonal optimisation via localised value echoes
#
# The diffusion solution is linear in the mask values, and the Dirichlet
# points screen the influence of a single value change: beyond a few mask
# spacings the echo is numerically zero. Each mask point's echo is solved
# once on a local patch (shared between points with identical local
# geometry), after which a tonal probe costs one patch-sized dot product.

def _echo_patch(xk: int, yk: int, mask: MaskedData, width: int, height: int,
                radius: int):
    x0, x1 = max(0, xk - radius), min(width - 1, xk + radius)
    y0, y1 = max(0, yk - radius), min(height - 1, yk + radius)
    ph, pw = y1 - y0 + 1, x1 - x0 + 1
    known = mask.indicator[y0:y1 + 1, x0:x1 + 1]
    idx = -np.ones((ph, pw), dtype=np.int64)
    unknown = ~known
    idx[unknown] = np.arange(int(unknown.sum()))
    rows, cols, data = [], [], []
    b = np.zeros(int(unknown.sum()))
    uy, ux = np.nonzero(unknown)
    for py, px in zip(uy, ux):
        i = idx[py, px]
        deg = 0
        for ny, nx in ((py - 1, px), (py + 1, px), (py, px - 1), (py, px + 1)):
            gy, gx = ny + y0, nx + x0
            if not (0 <= gy < height and 0 <= gx < width):
                continue  # image border: mirrored, ghost cancels
            deg += 1
            if not (0 <= ny < ph and 0 <= nx < pw):
                continue  # patch border: echo clamped to zero outside
            if known[ny, nx]:
                if gy == yk and gx == xk:
                    b[i] += 1.0
            else:
                rows.append(i)
                cols.append(idx[ny, nx])
                data.append(-1.0)
        rows.append(i)
        cols.append(i)
        data.append(float(deg))
    A = sp.csr_matrix((data, (rows, cols)),
                      shape=(len(b), len(b)))
    phi_u = spsolve(A.tocsc(), b)
    phi = np.zeros((ph, pw))
    phi[unknown] = phi_u
    phi[yk - y0, xk - x0] = 1.0
    return (x0, x1, y0, y1), phi


def hom_trial_tonal(mask: MaskedData, levels, q: int, truth,
                    sweeps: int, seed: int,
                    config: SolverConfig | None = None,
                    echo_radius: int | None = None):
    """Trial-and-error tonal optimisation for homogeneous diffusion.

    Probes are evaluated with precomputed local value echoes; accepted
    changes update the maintained solution in place, so its squared error
    decreases monotonically. A final full solve removes the accumulated
    patch-truncation error before the result is returned.

    Returns (levels, reconstruction).
    """
    truth = np.asarray(truth, dtype=np.float64)
    height, width = truth.shape
    levels = np.ascontiguousarray(levels, dtype=np.int64)
    n = mask.size
    if echo_radius is None:
        spacing = math.sqrt(width * height / n)
        echo_radius = max(8, int(math.ceil(6.0 * spacing)))

    values = dequantize_array(levels, q)
    u = inpaint_hom(mask, values, width, height, config)

    cache: dict = {}
    boxes = [None] * n
    echoes = [None] * n
    for k in range(n):
        xk, yk = int(mask.positions[k, 0]), int(mask.positions[k, 1])
        x0, x1 = max(0, xk - echo_radius), min(width - 1, xk + echo_radius)
        y0, y1 = max(0, yk - echo_radius), min(height - 1, yk + echo_radius)
        sub = mask.indicator[y0:y1 + 1, x0:x1 + 1]
        key = (x0 - xk, x1 - xk, y0 - yk, y1 - yk, sub.tobytes())
        hit = cache.get(key)
        if hit is None:
            box, phi = _echo_patch(xk, yk, mask, width, height, echo_radius)
            cache[key] = phi
            boxes[k] = box
            echoes[k] = phi
        else:
            boxes[k] = (x0, x1, y0, y1)
            echoes[k] = hit

    rng = np.random.default_rng(seed)
    step_val = 256.0 / q
    for _ in range(sweeps):
        for k in rng.permutation(n):
            x0, x1, y0, y1 = boxes[k]
            phi = echoes[k]
            r = u[y0:y1 + 1, x0:x1 + 1] - truth[y0:y1 + 1, x0:x1 + 1]
            dot_rphi = float(np.sum(r * phi))
            dot_phi2 = float(np.sum(phi * phi))
            for step in (1, -1):
                lvl = levels[k] + step
                if not 0 <= lvl <= q - 1:
                    continue
                delta = step * step_val
                d_sse = 2.0 * delta * dot_rphi + delta * delta * dot_phi2
                if d_sse < 0.0:
                    levels[k] = lvl
                    u[y0:y1 + 1, x0:x1 + 1] += delta * phi
                    break

    final = inpaint_hom(mask, dequantize_array(levels, q), width, height,
                        config, x0=u)
    return levels, final


def hom_mse_after_trial(image, mask: MaskedData, q: int, sweeps: int,
                        seed: int) -> float:
    from .tonal import quantize_array
    from .image import sample_values
    truth = np.asarray(image, dtype=np.float64)
    levels = quantize_array(sample_values(truth, mask), q)
    _, rec = hom_trial_tonal(mask, levels, q, truth, sweeps, seed)
    return mse(rec, truth)

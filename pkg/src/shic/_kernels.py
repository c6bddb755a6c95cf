"""Compiled inner loops shared by the inpainting and tonal-optimisation paths.

Everything here is deterministic: plain IEEE double arithmetic, sequential
loops in canonical mask raster order, no fastmath. The per-point scatter
order is the reference summation order that the vectorised gather in
shepard_iso reproduces bit-exactly.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def iso_half_width(sigma):
    """Half-width of the truncated window for a given sigma.

    L = ceil(4*sigma) bumped to even so the (L+1)-sided window is odd and
    symmetric; the half-width is L/2.
    """
    ell = int(math.ceil(4.0 * sigma))
    if ell % 2 == 1:
        ell += 1
    return ell // 2


@njit(cache=True)
def build_iso_table(sigma, half):
    side = 2 * half + 1
    t = np.empty((side, side), dtype=np.float64)
    for j in range(side):
        dy = float(j - half)
        for i in range(side):
            dx = float(i - half)
            t[j, i] = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    return t


@njit(cache=True)
def oriented_params(fx, fy, sigma, lam):
    """Oriented-Gaussian parameters (theta, sigma2, alpha, beta, gamma).

    The kernel axes follow the isophote: theta is the angle of the vector
    (fy, -fx) orthogonal to the gradient. When the diffusivity is exactly 1
    the quadratic form collapses to the isotropic one with beta = 0 and
    alpha = gamma = 1/(2*sigma^2), which keeps the isotropic reduction
    bit-exact.
    """
    s2 = fx * fx + fy * fy
    if lam == math.inf:
        g = 1.0
    else:
        g = 1.0 / (1.0 + s2 / (lam * lam))
    sig2 = sigma * math.sqrt(g)
    theta = math.atan2(-fx, fy)
    if sig2 == sigma:
        a = 1.0 / (2.0 * sigma * sigma)
        return theta, sig2, a, 0.0, a
    st = math.sin(theta)
    ct = math.cos(theta)
    s2t = math.sin(2.0 * theta)
    inv1 = 1.0 / (2.0 * sigma * sigma)
    inv2 = 1.0 / (2.0 * sig2 * sig2)
    alpha = ct * ct * inv1 + st * st * inv2
    beta = -s2t / (4.0 * sigma * sigma) + s2t / (4.0 * sig2 * sig2)
    gamma = st * st * inv1 + ct * ct * inv2
    return theta, sig2, alpha, beta, gamma


@njit(cache=True)
def oriented_params_batch(fxs, fys, sigmas, lam):
    n = fxs.shape[0]
    alphas = np.empty(n, dtype=np.float64)
    betas = np.empty(n, dtype=np.float64)
    gammas = np.empty(n, dtype=np.float64)
    for k in range(n):
        _, _, alphas[k], betas[k], gammas[k] = oriented_params(
            fxs[k], fys[k], sigmas[k], lam)
    return alphas, betas, gammas


@njit(cache=True)
def oriented_weight_value(dx, dy, sigma1, alpha, beta, gamma):
    if beta == 0.0 and alpha == gamma:
        return math.exp(-(dx * dx + dy * dy) / (2.0 * sigma1 * sigma1))
    return math.exp(-(alpha * dx * dx + 2.0 * beta * dx * dy + gamma * dy * dy))


@njit(cache=True)
def scatter_point(v, w, xc, yc, val, sigma1, alpha, beta, gamma, half):
    """Add one mask point's truncated oriented-Gaussian contribution."""
    height, width = v.shape
    y0 = yc - half
    if y0 < 0:
        y0 = 0
    y1 = yc + half
    if y1 > height - 1:
        y1 = height - 1
    x0 = xc - half
    if x0 < 0:
        x0 = 0
    x1 = xc + half
    if x1 > width - 1:
        x1 = width - 1
    ops = 0
    for py in range(y0, y1 + 1):
        dy = float(py - yc)
        for px in range(x0, x1 + 1):
            dx = float(px - xc)
            g = oriented_weight_value(dx, dy, sigma1, alpha, beta, gamma)
            w[py, px] += g
            v[py, px] += g * val
            ops += 1
    return ops


@njit(cache=True)
def aniso_accumulate(xs, ys, vals, sig1s, alphas, betas, gammas, halves,
                     width, height):
    """Canonical-order scatter accumulation with per-point oriented kernels."""
    v = np.zeros((height, width), dtype=np.float64)
    w = np.zeros((height, width), dtype=np.float64)
    ops = 0
    for k in range(xs.shape[0]):
        ops += scatter_point(v, w, xs[k], ys[k], vals[k], sig1s[k],
                             alphas[k], betas[k], gammas[k], halves[k])
    return v, w, ops


@njit(cache=True)
def iso_accumulate(xs, ys, vals, table, half, width, height):
    """Canonical-order scatter with one shared isotropic weight table."""
    v = np.zeros((height, width), dtype=np.float64)
    w = np.zeros((height, width), dtype=np.float64)
    ops = 0
    for k in range(xs.shape[0]):
        xc = xs[k]
        yc = ys[k]
        val = vals[k]
        y0 = max(0, yc - half)
        y1 = min(height - 1, yc + half)
        x0 = max(0, xc - half)
        x1 = min(width - 1, xc + half)
        for py in range(y0, y1 + 1):
            for px in range(x0, x1 + 1):
                g = table[py - yc + half, px - xc + half]
                w[py, px] += g
                v[py, px] += g * val
                ops += 1
    return v, w, ops


@njit(cache=True)
def build_buckets(xs, ys, width, height, bucket):
    """CSR bucket index of the mask points on a coarse grid.

    Returns (starts, order, nbx, nby); each bucket's slice of `order` holds
    point indices in ascending (canonical) order.
    """
    n = xs.shape[0]
    nbx = (width + bucket - 1) // bucket
    nby = (height + bucket - 1) // bucket
    counts = np.zeros(nbx * nby, dtype=np.int64)
    for k in range(n):
        counts[(ys[k] // bucket) * nbx + (xs[k] // bucket)] += 1
    starts = np.zeros(nbx * nby + 1, dtype=np.int64)
    for b in range(nbx * nby):
        starts[b + 1] = starts[b] + counts[b]
    fill = starts[:-1].copy()
    order = np.empty(n, dtype=np.int64)
    for k in range(n):
        b = (ys[k] // bucket) * nbx + (xs[k] // bucket)
        order[fill[b]] = k
        fill[b] += 1
    return starts, order, nbx, nby


@njit(cache=True)
def collect_box_points(starts, order, nbx, nby, bucket, x0, x1, y0, y1, buf):
    """Indices of points inside buckets overlapping the box, sorted ascending.

    Callers still apply their exact geometric filter; this only prunes the
    candidate set. Returns the candidate count (buf is filled in place).
    """
    bx0 = max(0, x0 // bucket)
    bx1 = min(nbx - 1, x1 // bucket)
    by0 = max(0, y0 // bucket)
    by1 = min(nby - 1, y1 // bucket)
    m = 0
    for by in range(by0, by1 + 1):
        for bx in range(bx0, bx1 + 1):
            b = by * nbx + bx
            for s in range(starts[b], starts[b + 1]):
                buf[m] = order[s]
                m += 1
    buf[:m].sort()
    return m


@njit(cache=True)
def reinpaint_box(bx0, bx1, by0, by1, xs, ys, vals, sig1s, alphas, betas,
                  gammas, halves):
    """From-scratch v/w accumulation restricted to an inclusive pixel box.

    Mask points are visited in canonical order, so per-pixel sums match a
    full-image accumulation bit-exactly.
    """
    n = xs.shape[0]
    cand = np.arange(n)
    vp, wp, _ = reinpaint_box_cand(bx0, bx1, by0, by1, cand, n, xs, ys, vals,
                                   sig1s, alphas, betas, gammas, halves)
    return vp, wp


@njit(cache=True)
def reinpaint_box_cand(bx0, bx1, by0, by1, cand, ncand, xs, ys, vals, sig1s,
                       alphas, betas, gammas, halves):
    """reinpaint_box over an ascending candidate superset of the contributing
    points; identical sums because non-contributors are skipped exactly.
    Also returns the accumulated-pixel work count."""
    bh = by1 - by0 + 1
    bw = bx1 - bx0 + 1
    vp = np.zeros((bh, bw), dtype=np.float64)
    wp = np.zeros((bh, bw), dtype=np.float64)
    ops = 0
    for c in range(ncand):
        k = cand[c]
        half = halves[k]
        xc = xs[k]
        yc = ys[k]
        if xc + half < bx0 or xc - half > bx1:
            continue
        if yc + half < by0 or yc - half > by1:
            continue
        y0 = max(by0, yc - half)
        y1 = min(by1, yc + half)
        x0 = max(bx0, xc - half)
        x1 = min(bx1, xc + half)
        val = vals[k]
        s1 = sig1s[k]
        al = alphas[k]
        be = betas[k]
        ga = gammas[k]
        for py in range(y0, y1 + 1):
            dy = float(py - yc)
            for px in range(x0, x1 + 1):
                dx = float(px - xc)
                g = oriented_weight_value(dx, dy, s1, al, be, ga)
                wp[py - by0, px - bx0] += g
                vp[py - by0, px - bx0] += g * val
                ops += 1
    return vp, wp, ops


# ---------------------------------------------------------------------------
# Closed-form tonal optimisation for the global-sigma isotropic case

@njit(cache=True)
def closed_form_value(xc, yc, old, v, w, table, half, truth):
    """Unquantised local-MSE minimiser for one mask point."""
    height, width = truth.shape
    y0 = max(0, yc - half)
    y1 = min(height - 1, yc + half)
    x0 = max(0, xc - half)
    x1 = min(width - 1, xc + half)
    num = 0.0
    den = 0.0
    for py in range(y0, y1 + 1):
        for px in range(x0, x1 + 1):
            g = table[py - yc + half, px - xc + half]
            wi = w[py, px]
            num += (g / wi) * (truth[py, px] - v[py, px] / wi)
            den += (g * g) / (wi * wi)
    return old + num / den


@njit(cache=True)
def window_sse_pair(xc, yc, delta, v, w, table, half, truth):
    """Window squared error before and after adding delta at (xc, yc)."""
    height, width = truth.shape
    y0 = max(0, yc - half)
    y1 = min(height - 1, yc + half)
    x0 = max(0, xc - half)
    x1 = min(width - 1, xc + half)
    e_old = 0.0
    e_new = 0.0
    for py in range(y0, y1 + 1):
        for px in range(x0, x1 + 1):
            g = table[py - yc + half, px - xc + half]
            wi = w[py, px]
            f = truth[py, px]
            r_old = f - v[py, px] / wi
            r_new = f - (v[py, px] + g * delta) / wi
            e_old += r_old * r_old
            e_new += r_new * r_new
    return e_old, e_new


@njit(cache=True)
def apply_value_delta(xc, yc, delta, v, table, half):
    height, width = v.shape
    y0 = max(0, yc - half)
    y1 = min(height - 1, yc + half)
    x0 = max(0, xc - half)
    x1 = min(width - 1, xc + half)
    for py in range(y0, y1 + 1):
        for px in range(x0, x1 + 1):
            v[py, px] += table[py - yc + half, px - xc + half] * delta


@njit(cache=True)
def closed_form_sweeps(xs, ys, levels, values, v, w, table, half, truth, q,
                       sweeps):
    """Closed-form tonal sweeps with quantised projection and guarded commit.

    Mutates levels, values and the value map in place. A projected update is
    committed only when the window squared error does not increase, which
    keeps the global MSE non-increasing. Returns the commit count.
    """
    n = xs.shape[0]
    committed = 0
    for _ in range(sweeps):
        for k in range(n):
            xc = xs[k]
            yc = ys[k]
            old = values[k]
            cand = closed_form_value(xc, yc, old, v, w, table, half, truth)
            if cand < 0.0:
                cand = 0.0
            elif cand > 255.0:
                cand = 255.0
            lvl = int(cand * q / 256.0)
            if lvl > q - 1:
                lvl = q - 1
            newval = (lvl + 0.5) * 256.0 / q
            if newval == old:
                continue
            delta = newval - old
            e_old, e_new = window_sse_pair(xc, yc, delta, v, w, table, half,
                                           truth)
            if e_new <= e_old:
                apply_value_delta(xc, yc, delta, v, table, half)
                values[k] = newval
                levels[k] = lvl
                committed += 1
    return committed


# ---------------------------------------------------------------------------
# Trial-and-error tonal optimisation, per-point isotropic kernels
# (regular-grid isotropic and subdivision-tree isotropic codecs)

@njit(cache=True)
def _box_sse_covered(u, truth, bx0, bx1, by0, by1, w):
    sse = 0.0
    for py in range(by0, by1 + 1):
        for px in range(bx0, bx1 + 1):
            if w[py, px] > 0.0:
                d = u[py, px] - truth[py, px]
                sse += d * d
    return sse


@njit(cache=True)
def _patch_sse_covered(vp, wp, truth, bx0, bx1, by0, by1, out_u):
    """Reconstruction and covered-pixel SSE of a re-inpainted patch."""
    sse = 0.0
    for py in range(by0, by1 + 1):
        for px in range(bx0, bx1 + 1):
            wpx = wp[py - by0, px - bx0]
            if wpx > 0.0:
                uu = vp[py - by0, px - bx0] / wpx
                if uu < 0.0:
                    uu = 0.0
                elif uu > 255.0:
                    uu = 255.0
                out_u[py - by0, px - bx0] = uu
                d = uu - truth[py, px]
                sse += d * d
            else:
                out_u[py - by0, px - bx0] = -1.0
    return sse


@njit(cache=True)
def trial_sweep_local_iso(order, xs, ys, levels, values, q, sig1s, alphas,
                          betas, gammas, halves, v, w, u, truth, work_budget):
    """One trial sweep for per-point isotropic kernels.

    For each visited point, levels +1 then -1 are tried; the window around
    the point is re-inpainted from scratch and the change is kept only when
    the covered-pixel squared error strictly decreases. Hole pixels keep a
    frozen fallback during optimisation. The sweep stops (deterministically)
    once work_budget accumulated pixels have been spent.
    Returns (accepted, sse_delta_total).
    """
    height, width = truth.shape
    n = xs.shape[0]
    accepted = 0
    sse_total = 0.0
    spent = 0
    max_half = 0
    for k in range(n):
        if halves[k] > max_half:
            max_half = halves[k]
    bucket = max(4, int(math.sqrt(width * height / n)) + 1)
    starts, border, nbx, nby = build_buckets(xs, ys, width, height, bucket)
    cand = np.empty(n, dtype=np.int64)
    for oi in range(order.shape[0]):
        if spent > work_budget:
            break
        k = order[oi]
        xc = xs[k]
        yc = ys[k]
        half = halves[k]
        bx0 = max(0, xc - half)
        bx1 = min(width - 1, xc + half)
        by0 = max(0, yc - half)
        by1 = min(height - 1, yc + half)
        ncand = collect_box_points(starts, border, nbx, nby, bucket,
                                   bx0 - max_half, bx1 + max_half,
                                   by0 - max_half, by1 + max_half, cand)
        for step in (1, -1):
            lvl = levels[k] + step
            if lvl < 0 or lvl > q - 1:
                continue
            newval = (lvl + 0.5) * 256.0 / q
            oldval = values[k]
            values[k] = newval
            vp, wp, ops = reinpaint_box_cand(bx0, bx1, by0, by1, cand, ncand,
                                             xs, ys, values, sig1s, alphas,
                                             betas, gammas, halves)
            values[k] = oldval
            spent += ops
            up = np.empty_like(vp)
            sse_new = _patch_sse_covered(vp, wp, truth, bx0, bx1, by0, by1, up)
            sse_old = _box_sse_covered(u, truth, bx0, bx1, by0, by1, w)
            if sse_new < sse_old:
                values[k] = newval
                levels[k] = lvl
                for py in range(by0, by1 + 1):
                    for px in range(bx0, bx1 + 1):
                        v[py, px] = vp[py - by0, px - bx0]
                        w[py, px] = wp[py - by0, px - bx0]
                        if up[py - by0, px - bx0] >= 0.0:
                            u[py, px] = up[py - by0, px - bx0]
                accepted += 1
                sse_total += sse_new - sse_old
                break
    return accepted, sse_total


# ---------------------------------------------------------------------------
# Trial-and-error tonal optimisation, anisotropic kernels

@njit(cache=True, inline="always")
def _u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, px, py):
    """Candidate pass-1 value at one pixel after adding delta at (xc, yc).

    Evaluated lazily: only the few pixels feeding the gradients of affected
    mask points are touched per trial."""
    dx = px - xc
    dy = py - yc
    if -half1 <= dx <= half1 and -half1 <= dy <= half1:
        g = table1[dy + half1, dx + half1]
        uu = (v1[py, px] + g * delta) / w1[py, px]
        if uu < 0.0:
            return 0.0
        if uu > 255.0:
            return 255.0
        return uu
    return u1[py, px]


@njit(cache=True)
def _grad_at(u1, v1, w1, table1, half1, xc, yc, delta, x, y):
    """Central-difference gradient at (x, y) of the candidate pass-1 image;
    one-sided differences at the image border."""
    height, width = u1.shape
    if x == 0:
        fx = (_u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, 1, y)
              - _u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, 0, y))
    elif x == width - 1:
        fx = (_u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, width - 1, y)
              - _u1_cand(u1, v1, w1, table1, half1, xc, yc, delta,
                         width - 2, y))
    else:
        fx = (_u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, x + 1, y)
              - _u1_cand(u1, v1, w1, table1, half1, xc, yc, delta,
                         x - 1, y)) / 2.0
    if y == 0:
        fy = (_u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, x, 1)
              - _u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, x, 0))
    elif y == height - 1:
        fy = (_u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, x,
                       height - 1)
              - _u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, x,
                         height - 2))
    else:
        fy = (_u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, x, y + 1)
              - _u1_cand(u1, v1, w1, table1, half1, xc, yc, delta, x,
                         y - 1)) / 2.0
    return fx, fy


@njit(cache=True)
def trial_sweep_aniso(order, xs, ys, levels, values, q, lam, sigmas,
                      v1, w1, u1, table1, half1,
                      fxs, fys, alphas, betas, gammas, halves,
                      v, w, u, truth, work_budget):
    """One trial sweep for anisotropic Shepard inpainting.

    A candidate value change touches the pass-1 isotropic image inside the
    point's global-sigma window, hence the derivatives (and kernels) of every
    mask point within that window plus a one-pixel halo. The union of those
    points' windows is re-inpainted from scratch and the candidate is kept
    only when the covered squared error strictly decreases.

    Mutates all per-point arrays and the maps in place.
    Returns (accepted, sse_delta_total).
    """
    height, width = truth.shape
    n = xs.shape[0]
    accepted = 0
    sse_total = 0.0
    cand_idx = np.empty(n, dtype=np.int64)
    cand_fx = np.empty(n, dtype=np.float64)
    cand_fy = np.empty(n, dtype=np.float64)
    cand_al = np.empty(n, dtype=np.float64)
    cand_be = np.empty(n, dtype=np.float64)
    cand_ga = np.empty(n, dtype=np.float64)
    work_al = np.empty(n, dtype=np.float64)
    work_be = np.empty(n, dtype=np.float64)
    work_ga = np.empty(n, dtype=np.float64)
    box_cand = np.empty(n, dtype=np.int64)
    rp_cand = np.empty(n, dtype=np.int64)
    max_half = 0
    for k in range(n):
        if halves[k] > max_half:
            max_half = halves[k]
    bucket = max(4, int(math.sqrt(width * height / n)) + 1)
    starts, border, nbx, nby = build_buckets(xs, ys, width, height, bucket)
    spent = 0

    for oi in range(order.shape[0]):
        if spent > work_budget:
            break
        k = order[oi]
        xc = xs[k]
        yc = ys[k]
        # pass-1 window of the visited point
        wx0 = max(0, xc - half1)
        wx1 = min(width - 1, xc + half1)
        wy0 = max(0, yc - half1)
        wy1 = min(height - 1, yc + half1)
        # gradient halo of one pixel around the pass-1 window
        gx0 = max(0, wx0 - 1)
        gx1 = min(width - 1, wx1 + 1)
        gy0 = max(0, wy0 - 1)
        gy1 = min(height - 1, wy1 + 1)
        ng = collect_box_points(starts, border, nbx, nby, bucket,
                                gx0, gx1, gy0, gy1, box_cand)
        for step in (1, -1):
            lvl = levels[k] + step
            if lvl < 0 or lvl > q - 1:
                continue
            newval = (lvl + 0.5) * 256.0 / q
            delta = newval - values[k]
            # mask points whose derivatives may change
            nc = 0
            bx0 = xc
            bx1 = xc
            by0 = yc
            by1 = yc
            for c in range(ng):
                j = box_cand[c]
                if gx0 <= xs[j] <= gx1 and gy0 <= ys[j] <= gy1:
                    fx, fy = _grad_at(u1, v1, w1, table1, half1, xc, yc,
                                      delta, xs[j], ys[j])
                    _, _, al, be, ga = oriented_params(fx, fy, sigmas[j], lam)
                    cand_idx[nc] = j
                    cand_fx[nc] = fx
                    cand_fy[nc] = fy
                    cand_al[nc] = al
                    cand_be[nc] = be
                    cand_ga[nc] = ga
                    nc += 1
                    hj = halves[j]
                    if xs[j] - hj < bx0:
                        bx0 = xs[j] - hj
                    if xs[j] + hj > bx1:
                        bx1 = xs[j] + hj
                    if ys[j] - hj < by0:
                        by0 = ys[j] - hj
                    if ys[j] + hj > by1:
                        by1 = ys[j] + hj
            hk = halves[k]
            if xc - hk < bx0:
                bx0 = xc - hk
            if xc + hk > bx1:
                bx1 = xc + hk
            if yc - hk < by0:
                by0 = yc - hk
            if yc + hk > by1:
                by1 = yc + hk
            bx0 = max(0, bx0)
            by0 = max(0, by0)
            bx1 = min(width - 1, bx1)
            by1 = min(height - 1, by1)

            # candidate kernel table: swap in candidate params
            for c in range(nc):
                j = cand_idx[c]
                work_al[j] = alphas[j]
                work_be[j] = betas[j]
                work_ga[j] = gammas[j]
                alphas[j] = cand_al[c]
                betas[j] = cand_be[c]
                gammas[j] = cand_ga[c]
            oldval = values[k]
            values[k] = newval
            nrp = collect_box_points(starts, border, nbx, nby, bucket,
                                     bx0 - max_half, bx1 + max_half,
                                     by0 - max_half, by1 + max_half, rp_cand)
            vp, wp, ops = reinpaint_box_cand(bx0, bx1, by0, by1, rp_cand, nrp,
                                             xs, ys, values, sigmas, alphas,
                                             betas, gammas, halves)
            spent += ops
            up = np.empty_like(vp)
            sse_new = _patch_sse_covered(vp, wp, truth, bx0, bx1, by0, by1, up)
            sse_old = _box_sse_covered(u, truth, bx0, bx1, by0, by1, w)
            if sse_new < sse_old:
                # keep candidate kernels, commit maps and pass-1 state
                levels[k] = lvl
                for py in range(wy0, wy1 + 1):
                    for px in range(wx0, wx1 + 1):
                        g = table1[py - yc + half1, px - xc + half1]
                        uu = (v1[py, px] + g * delta) / w1[py, px]
                        if uu < 0.0:
                            uu = 0.0
                        elif uu > 255.0:
                            uu = 255.0
                        u1[py, px] = uu
                        v1[py, px] += g * delta
                for c in range(nc):
                    j = cand_idx[c]
                    fxs[j] = cand_fx[c]
                    fys[j] = cand_fy[c]
                for py in range(by0, by1 + 1):
                    for px in range(bx0, bx1 + 1):
                        v[py, px] = vp[py - by0, px - bx0]
                        w[py, px] = wp[py - by0, px - bx0]
                        if up[py - by0, px - bx0] >= 0.0:
                            u[py, px] = up[py - by0, px - bx0]
                accepted += 1
                sse_total += sse_new - sse_old
                break
            # revert
            values[k] = oldval
            for c in range(nc):
                j = cand_idx[c]
                alphas[j] = work_al[j]
                betas[j] = work_be[j]
                gammas[j] = work_ga[j]
    return accepted, sse_total


# ---------------------------------------------------------------------------
# Joint inpainting and prediction traversal (regular-grid isotropic codec)

@njit(cache=True)
def rjip_traversal(xs, ys, levels, residuals, q, table, half, width, height,
                   decode):
    """Shared encoder/decoder traversal in canonical mask order.

    Encoding (decode=False): reads levels, writes residuals.
    Decoding (decode=True): reads residuals, writes levels.
    Returns (v, w, ops) after all points are accumulated; the maps evolve
    identically on both sides, which makes the final reconstructions
    bit-identical.
    """
    v = np.zeros((height, width), dtype=np.float64)
    w = np.zeros((height, width), dtype=np.float64)
    n = xs.shape[0]
    ops = 0
    for k in range(n):
        xc = xs[k]
        yc = ys[k]
        wk = w[yc, xc]
        if wk > 0.0:
            pred = v[yc, xc] / wk
            if pred < 0.0:
                pred = 0.0
            elif pred > 255.0:
                pred = 255.0
            p = int(pred * q / 256.0)
            if p > q - 1:
                p = q - 1
        else:
            p = 0
        if decode:
            lvl = (p - residuals[k]) % q
            if lvl < 0:
                lvl += q
            levels[k] = lvl
        else:
            e = (p - levels[k]) % q
            if e < 0:
                e += q
            residuals[k] = e
        val = (levels[k] + 0.5) * 256.0 / q
        y0 = max(0, yc - half)
        y1 = min(height - 1, yc + half)
        x0 = max(0, xc - half)
        x1 = min(width - 1, xc + half)
        for py in range(y0, y1 + 1):
            for px in range(x0, x1 + 1):
                g = table[py - yc + half, px - xc + half]
                w[py, px] += g
                v[py, px] += g * val
                ops += 1
    return v, w, ops


# ---------------------------------------------------------------------------
# Discrete Voronoi assignment (exact, lowest-index tie-breaking)

@njit(cache=True)
def voronoi_owners(xs, ys, width, height, bucket):
    """Nearest mask point per pixel with ties to the lowest canonical index.

    Mask points are bucketed on a coarse grid; each pixel scans buckets in
    expanding Chebyshev rings and stops once the ring cannot contain a closer
    point. Distances are exact integer squared Euclidean distances.
    """
    n = xs.shape[0]
    nbx = (width + bucket - 1) // bucket
    nby = (height + bucket - 1) // bucket
    counts = np.zeros(nbx * nby, dtype=np.int64)
    for k in range(n):
        b = (ys[k] // bucket) * nbx + (xs[k] // bucket)
        counts[b] += 1
    starts = np.zeros(nbx * nby + 1, dtype=np.int64)
    for b in range(nbx * nby):
        starts[b + 1] = starts[b] + counts[b]
    fill = starts[:-1].copy()
    order = np.empty(n, dtype=np.int64)
    for k in range(n):  # ascending k keeps each bucket sorted by index
        b = (ys[k] // bucket) * nbx + (xs[k] // bucket)
        order[fill[b]] = k
        fill[b] += 1

    owner = np.empty((height, width), dtype=np.int64)
    max_ring = max(nbx, nby)
    for py in range(height):
        pby = py // bucket
        for px in range(width):
            pbx = px // bucket
            best_d2 = np.int64(2 ** 62)
            best_k = np.int64(-1)
            for ring in range(max_ring + 1):
                if ring > 0:
                    mind = (ring - 1) * bucket + 1
                    if np.int64(mind) * np.int64(mind) > best_d2:
                        break
                by_lo = pby - ring
                by_hi = pby + ring
                for by in range(by_lo, by_hi + 1):
                    if by < 0 or by >= nby:
                        continue
                    on_edge_y = (by == by_lo) or (by == by_hi)
                    for bx in range(pbx - ring, pbx + ring + 1):
                        if bx < 0 or bx >= nbx:
                            continue
                        if not on_edge_y:
                            if bx != pbx - ring and bx != pbx + ring:
                                continue
                        b = by * nbx + bx
                        for s in range(starts[b], starts[b + 1]):
                            k = order[s]
                            ddx = np.int64(xs[k]) - np.int64(px)
                            ddy = np.int64(ys[k]) - np.int64(py)
                            d2 = ddx * ddx + ddy * ddy
                            if d2 < best_d2 or (d2 == best_d2 and k < best_k):
                                best_d2 = d2
                                best_k = k
            owner[py, px] = best_k
    return owner

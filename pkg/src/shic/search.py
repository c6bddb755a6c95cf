"""Golden-section searches used for codec parameter tuning."""

from __future__ import annotations

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_real(f, lo: float, hi: float, max_iter: int = 12,
                        probe_ends: bool = True):
    """Minimise f over [lo, hi]; returns (best_x, best_value).

    Assumes f is (roughly) unimodal; with the iteration cap this is a
    bounded-effort heuristic rather than an exact minimiser. probe_ends adds
    two evaluations at the interval ends as a hedge against edge optima.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_v = (c, fc) if fc <= fd else (d, fd)
    for _ in range(max_iter):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        if fc < best_v:
            best_x, best_v = c, fc
        if fd < best_v:
            best_x, best_v = d, fd
    if probe_ends:
        for x in (lo, hi):
            v = f(x)
            if v < best_v:
                best_x, best_v = x, v
    return best_x, best_v


def golden_section_int(f, lo: int, hi: int, max_iter: int = 12):
    """Minimise a memoised f over the integers in [lo, hi]."""
    cache: dict[int, float] = {}

    def probe(x: float) -> float:
        xi = int(round(x))
        xi = max(lo, min(hi, xi))
        if xi not in cache:
            cache[xi] = f(xi)
        return cache[xi]

    golden_section_real(probe, lo, hi, max_iter)
    best_x = min(cache, key=lambda x: (cache[x], x))
    return best_x, cache[best_x]

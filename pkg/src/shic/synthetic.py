"""Deterministic synthetic test scenes.

The reference photographs used in the rate-distortion studies (portrait and
wildlife/texture test sets) are not redistributable, so the harness ships
seeded generators with the same coarse statistics: a piecewise-smooth
portrait-like scene, a clear-foreground scene on a smooth background, and a
globally textured scene. Real PGM files can be substituted anywhere these
are used.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter


def _smooth_noise(shape, sigma, rng):
    n = gaussian_filter(rng.standard_normal(shape), sigma, mode="reflect")
    s = n.std()
    return n / s if s > 0 else n


def _normalize(img, lo=2.0, hi=253.0):
    img = np.asarray(img, dtype=np.float64)
    a, b = img.min(), img.max()
    if b - a < 1e-9:
        return np.full_like(img, (lo + hi) / 2.0)
    return lo + (img - a) * (hi - lo) / (b - a)


def make_portrait(size: int = 512, seed: int = 7) -> np.ndarray:
    """Piecewise-smooth portrait-like scene: large smooth regions separated
    by curved high-contrast edges, with one mildly textured band."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    u, v = x / size, y / size

    img = 150.0 + 60.0 * _smooth_noise((size, size), size / 4, rng)

    # head: bright ellipse with smooth internal shading
    cx, cy = 0.5 * size, 0.42 * size
    e1 = ((x - cx) / (0.30 * size)) ** 2 + ((y - cy) / (0.36 * size)) ** 2
    head = e1 <= 1.0
    shade = 190.0 + 45.0 * _smooth_noise((size, size), size / 6, rng)
    img[head] = shade[head]

    # headscarf: annular region above the face with a directional weave
    e2 = ((x - cx) / (0.40 * size)) ** 2 + ((y - 0.30 * size)
                                            / (0.42 * size)) ** 2
    scarf = (e2 <= 1.0) & ~head
    weave = 120.0 + 38.0 * np.sin(2 * np.pi * (6.5 * u + 9.0 * v)) \
        + 12.0 * _smooth_noise((size, size), 2.5, rng)
    img[scarf] = weave[scarf]

    # facial features: a few dark smooth blobs
    for fx, fy, rx, ry, val in ((0.40, 0.40, 0.045, 0.03, 60.0),
                                (0.60, 0.40, 0.045, 0.03, 60.0),
                                (0.50, 0.55, 0.05, 0.022, 90.0)):
        e = (((x - fx * size) / (rx * size)) ** 2
             + ((y - fy * size) / (ry * size)) ** 2)
        img[e <= 1.0] = val

    # shoulders: dark wedge at the bottom
    wedge = y / size > 0.78 + 0.08 * np.sin(2 * np.pi * u)
    img[wedge] = (70.0 + 25.0 * _smooth_noise((size, size), size / 5,
                                              rng))[wedge]
    return np.clip(img, 0, 255)


def make_foreground_scene(width: int = 768, height: int = 512,
                          seed: int = 11) -> np.ndarray:
    """Clear foreground subject on a very smooth background.

    Detail (edges, rings, plumage-like banding) is concentrated in two large
    blobs; the rest is a gentle gradient, the regime where adaptive masks pay
    off."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    u, v = x / width, y / height

    img = 170.0 + 50.0 * v + 18.0 * _smooth_noise((height, width),
                                                  min(width, height) / 3, rng)

    def blob(cx, cy, rx, ry, base, banding):
        e = ((x - cx * width) / (rx * width)) ** 2 \
            + ((y - cy * height) / (ry * height)) ** 2
        inside = e <= 1.0
        body = base + 35.0 * _smooth_noise((height, width),
                                           min(width, height) / 10, rng)
        body += banding * np.sin(2 * np.pi * (10.0 * v + 3.0 * u))
        img[inside] = body[inside]
        ring = (e <= 1.0) & (e >= 0.82)
        img[ring] = 30.0
        return inside

    b1 = blob(0.36, 0.55, 0.21, 0.33, 120.0, 30.0)
    b2 = blob(0.68, 0.50, 0.17, 0.27, 200.0, 24.0)

    # eyes and beak marks: small sharp features inside the subjects
    for fx, fy, r, val in ((0.36, 0.42, 0.025, 15.0), (0.68, 0.40, 0.02, 15.0),
                           (0.30, 0.50, 0.018, 240.0),
                           (0.74, 0.47, 0.015, 240.0)):
        e = ((x - fx * width) ** 2 + (y - fy * height) ** 2) \
            / (r * width) ** 2
        img[e <= 1.0] = val

    # a thin branch across the lower half
    branch = np.abs(y / height - (0.80 + 0.05 * np.sin(2 * np.pi * 1.5 * u))) \
        < 0.012
    img[branch & ~b1 & ~b2] = 45.0
    return np.clip(img, 0, 255)


def make_texture_scene(width: int = 768, height: int = 512,
                       seed: int = 13) -> np.ndarray:
    """Globally textured scene (brick-wall-like): fine detail everywhere, no
    smooth background for adaptive masks to exploit."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)

    brick_h, brick_w = 16, 48
    row = (y // brick_h).astype(np.int64)
    col = ((x + (row % 2) * (brick_w // 2)) // brick_w).astype(np.int64)
    per_brick = rng.uniform(90.0, 200.0, size=(row.max() + 1, col.max() + 1))
    img = per_brick[row, col]

    mortar = ((y % brick_h) < 2) | (((x + (row % 2) * (brick_w // 2))
                                     % brick_w) < 2)
    img[mortar] = 60.0

    img += 26.0 * _smooth_noise((height, width), 1.2, rng)
    img += 20.0 * _smooth_noise((height, width), 6.0, rng)
    img += 25.0 * np.sin(2 * np.pi * (x / 97.0)) \
        * np.sin(2 * np.pi * (y / 53.0))
    return np.clip(_normalize(img), 0, 255)

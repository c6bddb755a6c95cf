"""Pixel container, PGM file I/O, mask construction, test images, error metrics.

Images are 2-D float64 numpy arrays of shape (height, width) with values in
[0, 255]. Quantisation to 8 bit happens only when writing PGM files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d


class PgmError(ValueError):
    """Raised for malformed PGM data (bad header, maxval, or payload)."""


def _as_image(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D greyscale array, got shape {a.shape}")
    return a


@dataclass
class MaskedData:
    """The inpainting mask K: stored pixel positions plus their grey values.

    positions is an (N, 2) int array of (x, y) coordinates in raster order
    (y-major, then x). This order is the canonical traversal order everywhere.
    """

    positions: np.ndarray        # (N, 2) int32, columns (x, y)
    values: np.ndarray           # (N,) float64
    indicator: np.ndarray        # (height, width) bool

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.int32)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.indicator = np.ascontiguousarray(self.indicator, dtype=bool)
        n = len(self.positions)
        if n < 1:
            raise ValueError("mask must contain at least one position")
        if len(self.values) != n:
            raise ValueError("positions and values must have equal length")
        h, w = self.indicator.shape
        x, y = self.positions[:, 0], self.positions[:, 1]
        if x.min() < 0 or y.min() < 0 or x.max() >= w or y.max() >= h:
            raise ValueError("mask position out of bounds")

    @property
    def size(self) -> int:
        return len(self.positions)

    def with_values(self, values) -> "MaskedData":
        return MaskedData(self.positions, np.asarray(values, dtype=np.float64),
                          self.indicator)


def raster_sorted(positions: np.ndarray) -> np.ndarray:
    """Sort (x, y) positions into canonical raster order (y-major, then x)."""
    positions = np.asarray(positions)
    order = np.lexsort((positions[:, 0], positions[:, 1]))
    return positions[order]


def mask_from_positions(positions, width: int, height: int,
                        values=None) -> MaskedData:
    positions = raster_sorted(np.asarray(positions, dtype=np.int32))
    if len(np.unique(positions, axis=0)) != len(positions):
        raise ValueError("mask positions must be unique")
    indicator = np.zeros((height, width), dtype=bool)
    indicator[positions[:, 1], positions[:, 0]] = True
    if values is None:
        values = np.zeros(len(positions))
    return MaskedData(positions, values, indicator)


def make_regular_mask(width: int, height: int, r: int) -> MaskedData:
    """Regular grid mask anchored at (0, 0) with spacing r along both axes.

    Values are zero-initialised; use sample_values() to copy them from an
    image.
    """
    if r < 1:
        raise ValueError("grid spacing r must be >= 1")
    xs = np.arange(0, width, r, dtype=np.int32)
    ys = np.arange(0, height, r, dtype=np.int32)
    gx, gy = np.meshgrid(xs, ys)
    positions = np.column_stack([gx.ravel(), gy.ravel()])
    return mask_from_positions(positions, width, height)


def sample_values(image, mask: MaskedData) -> np.ndarray:
    """Grey values of `image` at the mask positions, in canonical order."""
    image = _as_image(image)
    return image[mask.positions[:, 1], mask.positions[:, 0]].astype(np.float64)


@dataclass
class DiskSpec:
    """Synthetic disk test image: a filled circle centred in a square frame."""

    size: int = 400
    radius: float = 120.0
    inside: float = 200.0
    outside: float = 40.0

    def __post_init__(self):
        if not (0 < self.radius < self.size / 2):
            raise ValueError("radius must satisfy 0 < radius < size/2")


def make_disk(spec: DiskSpec) -> np.ndarray:
    c = (spec.size - 1) / 2.0
    y, x = np.mgrid[0:spec.size, 0:spec.size]
    inside = (x - c) ** 2 + (y - c) ** 2 <= spec.radius ** 2
    img = np.full((spec.size, spec.size), float(spec.outside))
    img[inside] = float(spec.inside)
    return img


# ---------------------------------------------------------------------------
# PGM I/O (P5 binary and P2 ASCII, maxval 255 only)

def _pgm_tokens(data: bytes):
    """Yield whitespace-separated header tokens, skipping '#' comments."""
    i = 0
    n = len(data)
    while i < n:
        c = data[i:i + 1]
        if c in b" \t\r\n":
            i += 1
            continue
        if c == b"#":
            j = data.find(b"\n", i)
            i = n if j < 0 else j + 1
            continue
        j = i
        while j < n and data[j:j + 1] not in b" \t\r\n":
            j += 1
        yield i, data[i:j]
        i = j


def load_pgm(data: bytes) -> np.ndarray:
    """Parse PGM bytes (binary P5 or ASCII P2, maxval 255) into an image."""
    tokens = _pgm_tokens(data)
    try:
        _, magic = next(tokens)
    except StopIteration:
        raise PgmError("empty PGM data") from None
    if magic not in (b"P5", b"P2"):
        raise PgmError(f"unsupported PGM magic {magic!r} (want P5 or P2)")
    head = []
    for _ in range(3):
        try:
            pos, tok = next(tokens)
        except StopIteration:
            raise PgmError("truncated PGM header") from None
        try:
            head.append(int(tok))
        except ValueError:
            raise PgmError(f"non-numeric PGM header token {tok!r}") from None
    width, height, maxval = head
    if width < 1 or height < 1:
        raise PgmError(f"bad PGM dimensions {width}x{height}")
    if maxval != 255:
        raise PgmError(f"unsupported PGM maxval {maxval} (only 255)")
    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the payload
        start = pos + len(tok) + 1
        payload = data[start:start + count]
        if len(payload) < count:
            raise PgmError("truncated PGM payload")
        samples = np.frombuffer(payload, dtype=np.uint8, count=count)
    else:
        vals = []
        for _, tok in tokens:
            try:
                v = int(tok)
            except ValueError:
                raise PgmError(f"non-numeric PGM sample {tok!r}") from None
            if not 0 <= v <= 255:
                raise PgmError(f"PGM sample {v} out of range")
            vals.append(v)
            if len(vals) == count:
                break
        if len(vals) < count:
            raise PgmError("truncated PGM payload")
        samples = np.asarray(vals, dtype=np.uint8)
    return samples.reshape(height, width).astype(np.float64)


def quantize_to_u8(image) -> np.ndarray:
    """Round to nearest integer and clamp to [0, 255]."""
    return np.clip(np.rint(_as_image(image)), 0, 255).astype(np.uint8)


def save_pgm(image) -> bytes:
    img = quantize_to_u8(image)
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + img.tobytes()


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        return load_pgm(f.read())


def write_pgm(path, image) -> None:
    with open(path, "wb") as f:
        f.write(save_pgm(image))


# ---------------------------------------------------------------------------
# Error metrics

def mse(a, b) -> float:
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def _ssim_window(sigma: float = 1.5, radius: int = 5) -> np.ndarray:
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return k / k.sum()


def ssim(a, b, *, k1: float = 0.01, k2: float = 0.03,
         data_range: float = 255.0) -> float:
    """Mean structural similarity with an 11x11 Gaussian window (sigma 1.5).

    Local statistics use Gaussian weighting with reflective borders; the
    half-window margin is cropped before averaging, as in the reference
    implementation of the index.
    """
    a, b = _as_image(a), _as_image(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    radius = 5
    if min(a.shape) < 2 * radius + 1:
        raise ValueError("image smaller than the 11x11 SSIM window")
    win = _ssim_window(radius=radius)

    def smooth(x):
        x = correlate1d(x, win, axis=0, mode="reflect")
        return correlate1d(x, win, axis=1, mode="reflect")

    mu_a = smooth(a)
    mu_b = smooth(b)
    e_aa = smooth(a * a)
    e_bb = smooth(b * b)
    e_ab = smooth(a * b)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    smap = num / den
    interior = smap[radius:-radius, radius:-radius]
    return float(np.mean(interior))

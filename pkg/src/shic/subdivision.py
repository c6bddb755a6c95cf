"""Subdivision-tree codecs with isotropic and anisotropic Shepard inpainting.

The image starts as a single rectangle whose four corners form the mask.
Rectangles whose reconstruction error exceeds a target splitting error are
halved along their longer side (children share the split line); the leaf
corners of the resulting binary tree form an adaptive mask that costs one
bit per node to store. Kernel widths adapt to the local mask density through
the Voronoi-cell rule sigma_k = (ln(1 + A_k))^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import container, entropy
from .image import MaskedData, mask_from_positions, mse, sample_values
from .rjip import EncodeResult
from .search import golden_section_real
from .shepard_aniso import inpaint_aniso, inpaint_iso_local, voronoi_areas
from .shepard_iso import (clipped_window_ops, compute_sigma, inpaint_iso,
                          make_kernel, window_extent)
from .tonal import (dequantize_array, quantize_array, trial_optimize_aniso,
                    trial_optimize_local_iso)

MIN_SPLIT_SIDE = 3          # leaves with min(side) <= 2 are never split
DEFAULT_ITER_MAX = 3        # parameter/tonal alternations per tree level
DEFAULT_P_RANGE = (0.25, 2.5)
DEFAULT_LAMBDA_RANGE = (0.5, 64.0)
TRIAL_WORK_BUDGET = 200_000_000     # per tonal sweep, accumulated pixels
PROBE_WORK_BUDGET = 80_000_000      # per parameter probe inpaint


@dataclass
class Rect:
    x0: int
    y0: int
    x1: int
    y1: int                 # inclusive bounds

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def corners(self):
        return ((self.x0, self.y0), (self.x1, self.y0),
                (self.x0, self.y1), (self.x1, self.y1))


@dataclass
class TreeNode:
    rect: Rect
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def can_split(rect: Rect) -> bool:
    return min(rect.width, rect.height) >= MIN_SPLIT_SIDE


def split_rect(rect: Rect) -> tuple[Rect, Rect]:
    """Halve along the longer side; ties split vertically (left/right).

    Children share the split line, so the midline corners coincide and are
    deduplicated in the mask.
    """
    if rect.width >= rect.height:
        m = (rect.x0 + rect.x1) // 2
        return (Rect(rect.x0, rect.y0, m, rect.y1),
                Rect(m, rect.y0, rect.x1, rect.y1))
    m = (rect.y0 + rect.y1) // 2
    return (Rect(rect.x0, rect.y0, rect.x1, m),
            Rect(rect.x0, m, rect.x1, rect.y1))


def split_node(node: TreeNode) -> None:
    if not node.is_leaf:
        raise ValueError("node already split")
    if not can_split(node.rect):
        raise ValueError("rectangle too small to split")
    a, b = split_rect(node.rect)
    node.left = TreeNode(a)
    node.right = TreeNode(b)


def make_root(width: int, height: int) -> TreeNode:
    return TreeNode(Rect(0, 0, width - 1, height - 1))


def leaves(root: TreeNode) -> list[TreeNode]:
    out, stack = [], [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            out.append(node)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return out


def node_count(root: TreeNode) -> int:
    count, stack = 0, [root]
    while stack:
        node = stack.pop()
        count += 1
        if not node.is_leaf:
            stack.extend((node.left, node.right))
    return count


def serialize_tree(root: TreeNode) -> np.ndarray:
    """Depth-first preorder split flags: 1 = split, 0 = leaf."""
    bits, stack = [], [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            bits.append(0)
        else:
            bits.append(1)
            stack.append(node.right)
            stack.append(node.left)
    return np.asarray(bits, dtype=np.uint8)


class TreeFormatError(container.ContainerError):
    pass


def deserialize_tree(bits, width: int, height: int) -> TreeNode:
    bits = np.asarray(bits, dtype=np.uint8)
    if len(bits) < 1:
        raise TreeFormatError("empty tree bit stream")
    pos = [0]

    def build(rect: Rect) -> TreeNode:
        if pos[0] >= len(bits):
            raise TreeFormatError("tree bit stream ended prematurely")
        bit = bits[pos[0]]
        pos[0] += 1
        node = TreeNode(rect)
        if bit:
            if not can_split(rect):
                raise TreeFormatError("tree splits a rectangle below the "
                                      "minimum size")
            a, b = split_rect(rect)
            node.left = build(a)
            node.right = build(b)
        return node

    root = build(Rect(0, 0, width - 1, height - 1))
    if pos[0] != len(bits):
        raise TreeFormatError("trailing bits after tree")
    return root


def leaf_corners(root: TreeNode, width: int, height: int) -> MaskedData:
    """Deduplicated corner positions of all leaves, in canonical order."""
    corners = set()
    for leaf in leaves(root):
        corners.update(leaf.rect.corners())
    positions = np.asarray(sorted(corners, key=lambda c: (c[1], c[0])),
                           dtype=np.int32)
    return mask_from_positions(positions, width, height)


# ---------------------------------------------------------------------------
# Quantisation-level selection from the error curve

def quantization_error(image, q: int) -> float:
    image = np.asarray(image, dtype=np.float64)
    return mse(image, dequantize_array(quantize_array(image, q), q))


def select_q(image) -> int:
    """Smallest q where the quantisation-error curve flattens below slope 1."""
    image = np.asarray(image, dtype=np.float64)
    e_prev = quantization_error(image, 2)
    for q in range(2, 256):
        e_next = quantization_error(image, q + 1)
        if e_prev - e_next < 1.0:
            return q
        e_prev = e_next
    return 256


# ---------------------------------------------------------------------------
# Encoder

def _leaf_errors(root: TreeNode, rec, truth) -> list[tuple[TreeNode, float]]:
    err2 = (np.asarray(rec) - np.asarray(truth)) ** 2
    integral = np.zeros((err2.shape[0] + 1, err2.shape[1] + 1))
    integral[1:, 1:] = err2.cumsum(0).cumsum(1)
    out = []
    for leaf in leaves(root):
        r = leaf.rect
        sse = (integral[r.y1 + 1, r.x1 + 1] - integral[r.y0, r.x1 + 1]
               - integral[r.y1 + 1, r.x0] + integral[r.y0, r.x0])
        out.append((leaf, float(sse) / r.area))
    return out


def _tree_op_count(mask: MaskedData, sigmas, width: int, height: int,
                   aniso: bool) -> int:
    halves = np.array([window_extent(s) // 2 for s in np.atleast_1d(sigmas)])
    x = mask.positions[:, 0].astype(np.int64)
    y = mask.positions[:, 1].astype(np.int64)
    wx = np.minimum(x + halves, width - 1) - np.maximum(x - halves, 0) + 1
    wy = np.minimum(y + halves, height - 1) - np.maximum(y - halves, 0) + 1
    ops = int(np.sum(wx * wy))
    if aniso:
        half1 = make_kernel(compute_sigma(mask.size, width, height)).half
        ops += clipped_window_ops(mask.positions, half1, width, height)
    return ops


@dataclass
class TreeParams:
    q: int
    p: float
    target_split_error: float
    lam: float | None = None

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lambda must be positive")
        if not 2 <= self.q <= 256:
            raise ValueError("q must be in [2, 256]")


def _tree_inpaint(mask, values, p, lam, areas, width, height, pass1=None):
    sigmas = np.log1p(areas.astype(np.float64)) ** p
    if lam is None:
        return inpaint_iso_local(mask, values, sigmas, width, height)
    return inpaint_aniso(mask, values, sigmas, lam, width, height,
                         pass1=pass1)


def _inpaint_work(areas, p, width, height) -> int:
    """Predicted accumulation work (pixels) for the Voronoi-sigma field."""
    sigmas = np.log1p(areas.astype(np.float64)) ** p
    halves = np.array([window_extent(s) // 2 for s in sigmas])
    sides = np.minimum(2 * halves + 1, max(width, height))
    return int(np.sum(np.minimum(sides * sides, width * height)))


def subdivide_encode(image, target_split_error: float, mode: str = "anisotropic",
                     seed: int = 0, iter_max: int = DEFAULT_ITER_MAX,
                     trial_sweeps: int = 1,
                     search_iters: int = 6) -> EncodeResult:
    """Adaptive subdivision encode.

    Per tree level: place corner mask points, alternate golden-section
    parameter tuning (p, and lambda in anisotropic mode) with trial-and-error
    tonal optimisation, then split every leaf whose reconstruction error
    exceeds the target splitting error. Stops when nothing splits.
    """
    if target_split_error <= 0:
        raise ValueError("target_split_error must be positive")
    if mode not in ("isotropic", "anisotropic"):
        raise ValueError(f"unknown mode {mode!r}")
    aniso = mode == "anisotropic"
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    q = select_q(image)
    bit_width = max(1, math.ceil(math.log2(q)))

    root = make_root(width, height)
    p = container.round_fixed(1.0, container.P_SCALE)
    lam = container.round_fixed(8.0, container.LAMBDA_SCALE) if aniso else None
    levels = None
    mask = None
    areas = None
    level_idx = 0
    prev_size = 0
    while True:
        mask = leaf_corners(root, width, height)
        levels = quantize_array(sample_values(image, mask), q)
        areas = voronoi_areas(mask, width, height)
        # late levels that add only a handful of corners skip the parameter
        # search and run a single tonal sweep; the split loop itself stays
        # exact, this only caps re-optimisation effort
        light = level_idx > 0 and (mask.size - prev_size) < max(
            8, int(0.02 * mask.size))
        prev_size = mask.size
        rounds = 1 if light else iter_max

        for it in range(rounds):
            values = dequantize_array(levels, q)
            pass1 = None
            if aniso:
                # the derivative source depends only on the current values
                pass1 = inpaint_iso(mask, values,
                                    compute_sigma(mask.size, width, height),
                                    width, height)
            if not light:
                def p_probe(x):
                    px = container.round_fixed(x, container.P_SCALE)
                    if _inpaint_work(areas, px, width,
                                     height) > PROBE_WORK_BUDGET:
                        return math.inf
                    u = _tree_inpaint(mask, values, px, lam, areas, width,
                                      height, pass1)
                    return mse(u, image)

                p, _ = golden_section_real(p_probe, *DEFAULT_P_RANGE,
                                           max_iter=search_iters,
                                           probe_ends=False)
                p = container.round_fixed(p, container.P_SCALE)
                if aniso:
                    def lam_probe(x):
                        lx = container.round_fixed(x, container.LAMBDA_SCALE)
                        u = _tree_inpaint(mask, values, p, lx, areas, width,
                                          height, pass1)
                        return mse(u, image)

                    lam, _ = golden_section_real(lam_probe,
                                                 *DEFAULT_LAMBDA_RANGE,
                                                 max_iter=search_iters,
                                                 probe_ends=False)
                    lam = container.round_fixed(lam, container.LAMBDA_SCALE)
            sigmas = np.log1p(areas.astype(np.float64)) ** p
            if aniso:
                pass1_kernel = make_kernel(compute_sigma(mask.size, width,
                                                         height))
                levels, _, _ = trial_optimize_aniso(
                    mask, levels, q, image, sigmas, lam, pass1_kernel,
                    trial_sweeps, seed + 1000 * level_idx + it,
                    work_budget=TRIAL_WORK_BUDGET)
            else:
                levels, _, _ = trial_optimize_local_iso(
                    mask, levels, q, image, sigmas, trial_sweeps,
                    seed + 1000 * level_idx + it,
                    work_budget=TRIAL_WORK_BUDGET)

        rec = _tree_inpaint(mask, dequantize_array(levels, q), p, lam, areas,
                            width, height)
        split_any = False
        for leaf, err in _leaf_errors(root, rec, image):
            if err > target_split_error and can_split(leaf.rect):
                split_node(leaf)
                split_any = True
        if not split_any:
            if light:
                # terminal level ran in light mode: redo it at full effort so
                # the stored parameters and values are properly optimised
                prev_size = -1
                continue
            break
        level_idx += 1

    tree_bits = serialize_tree(root)
    payload = entropy.bit_encode(entropy.levels_to_bits(levels, bit_width), 2)
    blob = container.pack_tree(width, height, q, p, lam, tree_bits,
                               mask.size, payload)
    sigmas = np.log1p(areas.astype(np.float64)) ** p
    rec = _tree_inpaint(mask, dequantize_array(levels, q), p, lam, areas,
                        width, height)
    params = TreeParams(q=q, p=p, lam=lam,
                        target_split_error=target_split_error)
    return EncodeResult(blob=blob, reconstruction=rec, mse=mse(rec, image),
                        op_count=_tree_op_count(mask, sigmas, width, height,
                                                aniso),
                        params=params)


def subdivide_decode(data: bytes) -> np.ndarray:
    head, reader = container.read_header(data)
    if head.codec not in (container.CODEC_TREE_ISO,
                          container.CODEC_TREE_ANISO):
        raise container.ContainerError(
            f"not a subdivision codec: {container.CODEC_NAMES[head.codec]}")
    (p_fp,) = reader.unpack("<H")
    p = p_fp / container.P_SCALE
    lam = None
    if head.codec == container.CODEC_TREE_ANISO:
        (lam_fp,) = reader.unpack("<H")
        lam = lam_fp / container.LAMBDA_SCALE
    (bit_count,) = reader.unpack("<I")
    tree_bytes = reader.take((bit_count + 7) // 8)
    bits = np.unpackbits(np.frombuffer(tree_bytes, dtype=np.uint8))[:bit_count]
    root = deserialize_tree(bits, head.width, head.height)
    (value_count,) = reader.unpack("<I")
    payload = reader.rest()

    mask = leaf_corners(root, head.width, head.height)
    if mask.size != value_count:
        raise container.ContainerError("value count does not match the tree")
    bit_width = max(1, math.ceil(math.log2(head.q)))
    levels = entropy.bits_to_levels(
        entropy.bit_decode(payload, value_count * bit_width, 2), bit_width)
    if levels.max() > head.q - 1:
        raise container.ContainerError("decoded level out of range")
    areas = voronoi_areas(mask, head.width, head.height)
    return _tree_inpaint(mask, dequantize_array(levels, head.q), p, lam,
                         areas, head.width, head.height)


def search_split_error(image, target_ratio: float, mode: str = "anisotropic",
                       seed: int = 0, max_probes: int = 10,
                       ratio_tolerance: float = 0.10):
    """Tune the target splitting error so the achieved ratio lands on target.

    The achieved ratio grows with the threshold (fewer splits, smaller
    files). Starting from a generous threshold, the search walks down
    geometrically until the target is bracketed and then bisects on the log
    threshold. Walking downward keeps the expensive deep-tree probes to the
    end. Returns (threshold, EncodeResult, feasible).
    """
    image = np.asarray(image, dtype=np.float64)
    probes: dict[float, EncodeResult] = {}

    def run(thr: float) -> EncodeResult:
        if thr not in probes:
            probes[thr] = subdivide_encode(image, thr, mode, seed)
        return probes[thr]

    band = (target_ratio * (1 - ratio_tolerance),
            target_ratio * (1 + ratio_tolerance))
    thr = 40.0 * math.sqrt(target_ratio)
    lo = hi = None
    used = 0
    while used < max_probes:
        res = run(thr)
        used += 1
        if band[0] <= res.ratio <= band[1]:
            break
        if res.ratio > band[1]:
            hi = thr          # ratio too high: need more splits
        else:
            lo = thr          # ratio too low: need fewer splits
        if lo is not None and hi is not None:
            thr = math.exp((math.log(lo) + math.log(hi)) / 2.0)
        elif hi is not None:
            thr = hi / 3.0
        else:
            thr = lo * 3.0
        if thr < 0.5 or thr > 1e6:
            break
    best_thr = min(probes, key=lambda t: abs(math.log(probes[t].ratio
                                                      / target_ratio)))
    res = probes[best_thr]
    feasible = band[0] <= res.ratio <= band[1]
    return best_thr, res, feasible

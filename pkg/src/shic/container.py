"""Bit-exact compressed-file container shared by all four codecs.

Little-endian layout: magic "SHIC", version u8, codec id u8, width u16,
height u16, (q-1) u8, then codec-specific fields. Files are self-describing;
decoding needs no side information.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SHIC"
VERSION = 1

CODEC_RJIP = 0
CODEC_RJIP_A = 1
CODEC_TREE_ISO = 2
CODEC_TREE_ANISO = 3

CODEC_NAMES = {
    CODEC_RJIP: "rjip",
    CODEC_RJIP_A: "rjip-a",
    CODEC_TREE_ISO: "tree-iso",
    CODEC_TREE_ANISO: "tree-aniso",
}

LAMBDA_SCALE = 256.0       # u16 fixed point for lambda and sigma_scale
P_SCALE = 4096.0           # u16 fixed point for the Voronoi exponent


class ContainerError(ValueError):
    """Raised for malformed or truncated compressed files."""


def round_fixed(value: float, scale: float) -> float:
    """Round to the representable u16 fixed-point grid (at least one step)."""
    ticks = max(1, min(0xFFFF, int(round(value * scale))))
    return ticks / scale


def _pack_fixed(value: float, scale: float) -> int:
    ticks = int(round(value * scale))
    if not 0 <= ticks <= 0xFFFF:
        raise ContainerError(f"fixed-point value {value} out of range")
    return ticks


@dataclass
class Header:
    codec: int
    width: int
    height: int
    q: int


def _pack_common(codec: int, width: int, height: int, q: int) -> bytes:
    if not (1 <= width <= 0xFFFF and 1 <= height <= 0xFFFF):
        raise ContainerError("image dimensions must fit in u16")
    if not 2 <= q <= 256:
        raise ContainerError("q must be in [2, 256]")
    return MAGIC + struct.pack("<BBHHB", VERSION, codec, width, height, q - 1)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ContainerError("truncated compressed file")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def rest(self) -> bytes:
        out = self.data[self.pos:]
        self.pos = len(self.data)
        return out


def read_header(data: bytes) -> tuple[Header, _Reader]:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise ContainerError("bad magic: not a SHIC file")
    version, codec, width, height, qm1 = r.unpack("<BBHHB")
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    if codec not in CODEC_NAMES:
        raise ContainerError(f"unknown codec id {codec}")
    return Header(codec=codec, width=width, height=height, q=qm1 + 1), r


def pack_rjip(width: int, height: int, q: int, r: int, table_bytes: bytes,
              payload: bytes) -> bytes:
    if not 1 <= r <= 255:
        raise ContainerError("grid spacing r must fit in u8")
    head = _pack_common(CODEC_RJIP, width, height, q)
    return (head + struct.pack("<B", r) + table_bytes
            + struct.pack("<I", len(payload)) + payload)


def pack_rjip_a(width: int, height: int, q: int, r: int, lam: float,
                sigma_scale: float, payload: bytes) -> bytes:
    if not 1 <= r <= 255:
        raise ContainerError("grid spacing r must fit in u8")
    head = _pack_common(CODEC_RJIP_A, width, height, q)
    return (head + struct.pack("<BHH", r, _pack_fixed(lam, LAMBDA_SCALE),
                               _pack_fixed(sigma_scale, LAMBDA_SCALE))
            + struct.pack("<I", len(payload)) + payload)


def pack_tree(width: int, height: int, q: int, p: float, lam: float | None,
              tree_bits: np.ndarray, value_count: int,
              payload: bytes) -> bytes:
    codec = CODEC_TREE_ISO if lam is None else CODEC_TREE_ANISO
    head = _pack_common(codec, width, height, q)
    out = bytearray(head)
    out += struct.pack("<H", _pack_fixed(p, P_SCALE))
    if lam is not None:
        out += struct.pack("<H", _pack_fixed(lam, LAMBDA_SCALE))
    bits = np.asarray(tree_bits, dtype=np.uint8)
    out += struct.pack("<I", len(bits))
    out += np.packbits(bits).tobytes()
    out += struct.pack("<I", value_count)
    out += payload
    return bytes(out)

"""Self-contained entropy coding.

A deterministic byte-oriented range coder (32-bit carry-less state with byte
renormalisation) drives two models: a static frequency table for symbol
streams and an adaptive binary model (12-bit probabilities, adaptation
shift 5, previous-bit contexts) for bit streams. Integer arithmetic only, so
encoder output is identical across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TOP = 1 << 24
_BOTTOM = 1 << 16
_MASK32 = (1 << 32) - 1

_PROB_BITS = 12
_PROB_TOTAL = 1 << _PROB_BITS
_ADAPT_SHIFT = 5


@dataclass
class FrequencyTable:
    """Static symbol frequencies; every count >= 1, total <= 2^16."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if np.any(self.counts < 1):
            raise ValueError("all counts must be >= 1")
        if int(self.counts.sum()) > _BOTTOM:
            raise ValueError("table total must be <= 2^16")
        self.cum = np.concatenate([[0], np.cumsum(self.counts)])
        self.total = int(self.cum[-1])

    @property
    def q(self) -> int:
        return len(self.counts)

    def entropy_bits(self, symbols) -> float:
        """Cross-entropy of a stream under this table, in bits."""
        symbols = np.asarray(symbols, dtype=np.int64)
        p = self.counts[symbols] / self.total
        return float(-np.sum(np.log2(p)))


def build_table(symbols, q: int) -> FrequencyTable:
    """Laplace-smoothed histogram, halved until the total fits in 2^16."""
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= q):
        raise ValueError("symbol outside alphabet")
    counts = np.bincount(symbols, minlength=q).astype(np.int64) + 1
    while counts.sum() > _BOTTOM:
        counts = np.maximum(1, counts // 2)
    return FrequencyTable(counts)


def serialize_table(table: FrequencyTable) -> bytes:
    return table.counts.astype("<u2").tobytes()


def deserialize_table(data: bytes, q: int) -> FrequencyTable:
    if len(data) < 2 * q:
        raise ValueError("truncated frequency table")
    counts = np.frombuffer(data[:2 * q], dtype="<u2").astype(np.int64)
    return FrequencyTable(counts)


class RangeEncoder:
    def __init__(self):
        self.low = 0
        self.range = _MASK32
        self.out = bytearray()

    def encode(self, cum: int, freq: int, total: int) -> None:
        r = self.range // total
        self.low += r * cum
        self.range = r * freq
        while True:
            if (self.low ^ (self.low + self.range)) < _TOP:
                pass
            elif self.range < _BOTTOM:
                self.range = (-self.low) & (_BOTTOM - 1)
            else:
                break
            self.out.append((self.low >> 24) & 0xFF)
            self.low = (self.low << 8) & _MASK32
            self.range = (self.range << 8) & _MASK32

    def finish(self) -> bytes:
        for _ in range(4):
            self.out.append((self.low >> 24) & 0xFF)
            self.low = (self.low << 8) & _MASK32
        return bytes(self.out)


class RangeDecoder:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self.low = 0
        self.range = _MASK32
        self.code = 0
        for _ in range(4):
            self.code = (self.code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        b = self._data[self._pos] if self._pos < len(self._data) else 0
        self._pos += 1
        return b

    def decode_target(self, total: int) -> int:
        r = self.range // total
        dv = (self.code - self.low) // r
        return min(dv, total - 1)

    def decode_update(self, cum: int, freq: int, total: int) -> None:
        r = self.range // total
        self.low += r * cum
        self.range = r * freq
        while True:
            if (self.low ^ (self.low + self.range)) < _TOP:
                pass
            elif self.range < _BOTTOM:
                self.range = (-self.low) & (_BOTTOM - 1)
            else:
                break
            self.code = ((self.code << 8) | self._next_byte()) & _MASK32
            self.low = (self.low << 8) & _MASK32
            self.range = (self.range << 8) & _MASK32


def range_encode(symbols, table: FrequencyTable) -> bytes:
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= table.q):
        raise ValueError("symbol outside alphabet")
    cum = table.cum
    counts = table.counts
    total = table.total
    enc = RangeEncoder()
    for s in symbols:
        enc.encode(int(cum[s]), int(counts[s]), total)
    return enc.finish()


def range_decode(data: bytes, count: int, table: FrequencyTable) -> np.ndarray:
    cum = table.cum
    counts = table.counts
    total = table.total
    dec = RangeDecoder(data)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        dv = dec.decode_target(total)
        s = int(np.searchsorted(cum, dv, side="right")) - 1
        dec.decode_update(int(cum[s]), int(counts[s]), total)
        out[i] = s
    return out


class AdaptiveBitModel:
    """Binary probabilities per previous-bit context, 12-bit fixed point.

    The state stores P(bit = 1); it adapts by 1/2^5 of the remaining
    distance per observation and can never reach 0 or 2^12.
    """

    def __init__(self, order: int):
        if order not in (0, 1, 2):
            raise ValueError("model order must be 0, 1 or 2")
        self.order = order
        self.p1 = np.full(1 << order, _PROB_TOTAL // 2, dtype=np.int64)
        self.ctx = 0

    def split(self) -> tuple[int, int]:
        """(cum, freq) pair of the zero bit: [0, total - p1)."""
        p1 = int(self.p1[self.ctx])
        return 0, _PROB_TOTAL - p1

    def update(self, bit: int) -> None:
        p1 = int(self.p1[self.ctx])
        if bit:
            p1 += (_PROB_TOTAL - p1) >> _ADAPT_SHIFT
        else:
            p1 -= p1 >> _ADAPT_SHIFT
        self.p1[self.ctx] = p1
        self.ctx = ((self.ctx << 1) | bit) & ((1 << self.order) - 1)


def bit_encode(bits, model_order: int) -> bytes:
    model = AdaptiveBitModel(model_order)
    enc = RangeEncoder()
    for b in np.asarray(bits, dtype=np.int64):
        bit = int(b)
        if bit not in (0, 1):
            raise ValueError("bits must be 0 or 1")
        p1 = int(model.p1[model.ctx])
        p0 = _PROB_TOTAL - p1
        if bit:
            enc.encode(p0, p1, _PROB_TOTAL)
        else:
            enc.encode(0, p0, _PROB_TOTAL)
        model.update(bit)
    return enc.finish()


def bit_decode(data: bytes, count: int, model_order: int) -> np.ndarray:
    model = AdaptiveBitModel(model_order)
    dec = RangeDecoder(data)
    out = np.empty(count, dtype=np.int64)
    for i in range(count):
        p1 = int(model.p1[model.ctx])
        p0 = _PROB_TOTAL - p1
        bit = 0 if dec.decode_target(_PROB_TOTAL) < p0 else 1
        if bit:
            dec.decode_update(p0, p1, _PROB_TOTAL)
        else:
            dec.decode_update(0, p0, _PROB_TOTAL)
        model.update(bit)
        out[i] = bit
    return out


def levels_to_bits(levels, bit_width: int) -> np.ndarray:
    """Fixed-width big-endian-within-symbol bit fields."""
    levels = np.asarray(levels, dtype=np.int64)
    shifts = np.arange(bit_width - 1, -1, -1)
    return ((levels[:, None] >> shifts[None, :]) & 1).ravel()


def bits_to_levels(bits, bit_width: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).reshape(-1, bit_width)
    weights = 1 << np.arange(bit_width - 1, -1, -1)
    return bits @ weights

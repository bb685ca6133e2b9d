"""Bit-level reader/writer primitives for unaligned PER bitstreams.

UPER packs fields at arbitrary bit offsets, so all access goes through a
cursor measured in bits. Reads past the end raise instead of wrapping.
"""

from __future__ import annotations

from .errors import ConstraintViolation, TruncatedBitstream


class BitReader:
    """MSB-first cursor over an immutable byte buffer."""

    __slots__ = ("_value", "nbits", "pos")

    def __init__(self, data: bytes):
        self._value = int.from_bytes(data, "big")
        self.nbits = 8 * len(data)
        self.pos = 0

    def read_bits(self, width: int) -> int:
        end = self.pos + width
        if end > self.nbits:
            raise TruncatedBitstream(
                f"need {width} bits at offset {self.pos}, only {self.nbits - self.pos} left"
            )
        self.pos = end
        return (self._value >> (self.nbits - end)) & ((1 << width) - 1)

    def read_bit(self) -> int:
        return self.read_bits(1)

    def read_bytes(self, count: int) -> bytes:
        return self.read_bits(8 * count).to_bytes(count, "big")

    @property
    def remaining(self) -> int:
        return self.nbits - self.pos


class BitWriter:
    """Accumulates MSB-first bit fields; zero-pads the final byte."""

    __slots__ = ("_value", "nbits")

    def __init__(self):
        self._value = 0
        self.nbits = 0

    def write_bits(self, value: int, width: int) -> None:
        if width < 0 or value < 0 or value >> width:
            raise ValueError(f"value {value} does not fit in {width} bits")
        self._value = (self._value << width) | value
        self.nbits += width

    def write_bit(self, value: int) -> None:
        self.write_bits(value, 1)

    def write_bytes(self, data: bytes) -> None:
        self.write_bits(int.from_bytes(data, "big"), 8 * len(data))

    def to_bytes(self) -> bytes:
        pad = (-self.nbits) % 8
        return (self._value << pad).to_bytes((self.nbits + pad) // 8, "big")


def constrained_width(lo: int, hi: int) -> int:
    """Bit width of a constrained whole number in the unaligned variant."""
    if lo > hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    return (hi - lo).bit_length()


def read_constrained_int(reader: BitReader, lo: int, hi: int) -> int:
    """Read an integer constrained to [lo, hi]; zero bits when lo == hi.

    The raw bit-field can name values above hi when the range is not a
    power of two; those decode to ConstraintViolation, never silently clamp.
    """
    value = lo + reader.read_bits(constrained_width(lo, hi))
    if value > hi:
        raise ConstraintViolation(f"decoded {value} outside [{lo}, {hi}]")
    return value


def write_constrained_int(writer: BitWriter, value: int, lo: int, hi: int) -> None:
    if not lo <= value <= hi:
        raise ConstraintViolation(f"value {value} outside [{lo}, {hi}]")
    writer.write_bits(value - lo, constrained_width(lo, hi))

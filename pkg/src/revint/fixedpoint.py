"""Q3.60 fixed-point substrate for bitwise-reversible integration.

Values are signed 64-bit two's-complement integers interpreted as
``bits / 2**60``, so the representable range is [-8, 8) with quantum
2**-60. Only three operations touch the fixed side: conversion from
binary64 (truncating toward zero), conversion back to binary64, and
wrapping addition. Truncation (not floor) keeps the conversion
odd-symmetric, and wrapping keeps addition a group operation; together
these make every forward increment exactly undoable by its negation.
"""

import numpy as np

FRACTION_BITS = 60
SCALE = 1 << FRACTION_BITS          # 0x1000000000000000
SCALE_F = float(SCALE)
LIMIT = 8.0                         # 2**63 / 2**60
QUANTUM = 2.0 ** -FRACTION_BITS
MASK64 = (1 << 64) - 1
MIN_BITS = np.int64(-(1 << 63))
MAX_BITS = np.int64((1 << 63) - 1)
ONE = np.int64(SCALE)


class FixedRangeError(ValueError):
    """Real value cannot be represented in the Q3.60 format."""


def to_fixed(r):
    """Convert binary64 value(s) to Q3.60 bits, truncating toward zero.

    Raises FixedRangeError for non-finite inputs or |r| >= 8. Truncation
    makes the map odd-symmetric: to_fixed(-r) == -to_fixed(r).
    """
    r = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(r)) or np.any(np.abs(r) >= LIMIT):
        raise FixedRangeError("value outside representable range [-8, 8)")
    # r * 2**60 is exact (power-of-two scaling); the int64 cast truncates.
    return (r * SCALE_F).astype(np.int64)


def to_real(bits):
    """Convert Q3.60 bits back to binary64: bits / 2**60, round-to-nearest."""
    return np.asarray(bits, dtype=np.int64).astype(np.float64) / SCALE_F


def add_wrapping(a, b):
    """Add bit patterns modulo 2**64 (two's-complement wraparound).

    Exactly inverted by add_wrapping(result, -b) for every operand pair,
    which is what keeps integration reversible even through overflow.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    with np.errstate(over="ignore"):
        return a + b


def neg(bits):
    """Two's-complement negation (MIN_BITS maps to itself)."""
    with np.errstate(over="ignore"):
        return -np.asarray(bits, dtype=np.int64)


def format_hex(bits):
    """Render one Fixed value as 16 uppercase zero-padded hex digits."""
    return format(int(bits) & MASK64, "016X")


def parse_hex(text):
    """Parse a 16-hex-digit string back to Fixed bits (inverse of format_hex)."""
    if not isinstance(text, str) or len(text) != 16:
        raise ValueError(f"expected 16 hex digits, got {text!r}")
    try:
        raw = int(text, 16)
    except ValueError:
        raise ValueError(f"expected 16 hex digits, got {text!r}") from None
    if raw >= 1 << 63:
        raw -= 1 << 64
    return np.int64(raw)


def vector_to_hex(bits):
    """Serialize a Fixed vector as a list of hex strings."""
    return [format_hex(b) for b in np.asarray(bits, dtype=np.int64)]


def hex_to_vector(items):
    """Parse a list of hex strings into a Fixed vector."""
    return np.array([parse_hex(s) for s in items], dtype=np.int64)

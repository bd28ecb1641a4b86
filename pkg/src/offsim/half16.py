"""IEEE 754 binary16 encode/decode with round-to-nearest-even.

The simulated accelerator computes in 16-bit floating point. This module
converts between binary32 values and binary16 bit patterns so the engine
can reproduce that arithmetic on the host, where everything else stays
binary32.

Bit layout of a pattern, high to low:

    1 sign bit | 5 exponent bits (bias 15) | 10 mantissa bits

Exponent 0 with nonzero mantissa is subnormal (value = mantissa * 2**-24,
no implicit leading bit). Exponent 0x1F encodes infinity (mantissa 0) or
NaN (mantissa nonzero). Largest finite value is 65504; anything that
rounds past it becomes infinity of the same sign.

Rounding is always round-to-nearest, ties to even mantissa. Encoding a
NaN yields one canonical quiet pattern per sign; payload bits are not
preserved. Every non-NaN pattern survives a decode/encode round trip
bit-exactly because binary16 is a subset of binary32.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError

SIGN_MASK = 0x8000
EXPONENT_MASK = 0x7C00
MANTISSA_MASK = 0x03FF

POSITIVE_ZERO = 0x0000
NEGATIVE_ZERO = 0x8000
POSITIVE_INFINITY = 0x7C00
NEGATIVE_INFINITY = 0xFC00
CANONICAL_NAN = 0x7E00

MAX_FINITE = 65504.0
MIN_POSITIVE_SUBNORMAL = 2.0 ** -24
MIN_POSITIVE_NORMAL = 2.0 ** -14
EPSILON = 2.0 ** -10


def encode(value: float) -> int:
    """Encode a binary32 value as a 16-bit pattern.

    The argument is treated as binary32: Python floats are narrowed to
    float32 first, then converted with round-to-nearest-even. NaN inputs
    collapse to the canonical quiet NaN of their sign.
    """
    f = np.float32(value)
    if np.isnan(f):
        return CANONICAL_NAN | (SIGN_MASK if np.signbit(f) else 0)
    with np.errstate(over="ignore"):
        return int(f.astype(np.float16).view(np.uint16))


def decode(bits: int) -> float:
    """Decode a 16-bit pattern to its exact binary32 value.

    Every finite binary16 value is exactly representable in binary32, so
    decoding never rounds. Infinities map to float infinities and NaN
    patterns map to NaN.
    """
    if not 0 <= bits <= 0xFFFF:
        raise ValueError(f"pattern out of range: {bits!r}")
    return float(np.uint16(bits).view(np.float16).astype(np.float32))


def encode_array(values: np.ndarray) -> np.ndarray:
    """Vectorized encode: float32 array in, uint16 pattern array out."""
    with np.errstate(over="ignore"):
        f = np.asarray(values, dtype=np.float32)
        bits = f.astype(np.float16).view(np.uint16)
    nan = np.isnan(f)
    if nan.any():
        canonical = np.where(np.signbit(f), np.uint16(CANONICAL_NAN | SIGN_MASK),
                             np.uint16(CANONICAL_NAN))
        bits = np.where(nan, canonical, bits)
    return bits


def decode_array(bits: np.ndarray) -> np.ndarray:
    """Vectorized decode: uint16 pattern array in, float32 array out."""
    return np.asarray(bits, dtype=np.uint16).view(np.float16).astype(np.float32)


def quantize_array(values: np.ndarray) -> np.ndarray:
    """Round a float32 array through binary16 and back, elementwise.

    Equivalent to decode(encode(x)) per element. NaN stays NaN, values
    beyond the binary16 range become infinities, and anything already
    representable in binary16 passes through unchanged.
    """
    f = np.asarray(values, dtype=np.float32)
    with np.errstate(over="ignore"):
        return f.astype(np.float16).astype(np.float32)


def quantize(tensor):
    """Quantize a rank-4 tensor through binary16, preserving its shape."""
    from .tensors import Tensor

    if not isinstance(tensor, Tensor):
        raise ShapeMismatchError("quantize expects a Tensor")
    return Tensor(quantize_array(tensor.array))

"""Dense rank-4 tensors and their on-disk formats.

A tensor is a contiguous block of binary32 values laid out NCHW
row-major: the element at (n, c, y, x) lives at flat offset
((n * C + c) * H + y) * W + x.

Tensor files carry a small little-endian header followed by the raw
payload:

    offset  size  field
    0       4     magic "NTSR" (4E 54 53 52)
    4       2     u16 format version, currently 1
    6       2     u16 reserved, must be 0
    8       16    four u32 dims: n, c, h, w
    24      ...   n*c*h*w binary32 values, little-endian

Label files are UTF-8 text, one `sample-id<TAB>class-index` pair per
line, LF line endings, no header. Class indices are non-negative
decimal integers and sample ids may not repeat.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateSampleError,
    MalformedHeaderError,
    MalformedLineError,
    NonNumericClassError,
    ShapeOverflowError,
    TensorFileError,
    TruncatedPayloadError,
)

MAGIC = b"NTSR"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHH4I")
HEADER_SIZE = _HEADER.size

_MAX_ELEMENTS = np.iinfo(np.intp).max


@dataclass(frozen=True)
class Shape:
    """Batch, channels, height, width of a dense rank-4 tensor."""

    n: int
    c: int
    h: int
    w: int

    def __post_init__(self) -> None:
        for name in ("n", "c", "h", "w"):
            dim = getattr(self, name)
            if not isinstance(dim, int) or isinstance(dim, bool) or dim < 0:
                raise ValueError(f"dimension {name} must be a non-negative int, got {dim!r}")

    @property
    def count(self) -> int:
        return self.n * self.c * self.h * self.w

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.n, self.c, self.h, self.w)


class Tensor:
    """Immutable rank-4 float32 array.

    Wraps a C-contiguous numpy array of shape (n, c, h, w). The backing
    array is marked read-only; anyone who wants to mutate must copy.
    """

    __slots__ = ("shape", "array")

    def __init__(self, array: np.ndarray):
        arr = np.array(array, dtype=np.float32, order="C", copy=True)
        if arr.ndim != 4:
            raise ValueError(f"tensor must be rank 4, got rank {arr.ndim}")
        arr.setflags(write=False)
        object.__setattr__(self, "shape", Shape(*(int(d) for d in arr.shape)))
        object.__setattr__(self, "array", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Tensor is immutable")

    @property
    def flat(self) -> np.ndarray:
        """The values in flat NCHW row-major order (read-only view)."""
        return self.array.reshape(-1)

    def __repr__(self) -> str:
        s = self.shape
        return f"Tensor(n={s.n}, c={s.c}, h={s.h}, w={s.w})"


def zeros(shape: Shape) -> Tensor:
    return Tensor(np.zeros(shape.as_tuple(), dtype=np.float32))


def write_tensor_file(tensor: Tensor, path) -> None:
    """Write a tensor in the NTSR format. Bit patterns are preserved."""
    s = tensor.shape
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, 0, s.n, s.c, s.h, s.w)
    payload = np.ascontiguousarray(tensor.array, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_tensor_file(path) -> Tensor:
    """Read an NTSR file back into a Tensor, bit-exactly."""
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise MalformedHeaderError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    magic, version, reserved, n, c, h, w = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedHeaderError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise MalformedHeaderError(f"{path}: unsupported version {version}")
    if reserved != 0:
        raise MalformedHeaderError(f"{path}: reserved field must be 0, got {reserved}")
    count = n * c * h * w
    if count > _MAX_ELEMENTS:
        raise ShapeOverflowError(f"{path}: {n}x{c}x{h}x{w} exceeds the index range")
    expected = count * 4
    payload = data[HEADER_SIZE:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload holds {len(payload)} bytes, shape requires {expected}")
    if len(payload) > expected:
        raise TensorFileError(
            f"{path}: {len(payload) - expected} trailing bytes after the payload")
    values = np.frombuffer(payload, dtype="<f4", count=count)
    return Tensor(values.reshape(n, c, h, w))


def read_labels(path) -> list[tuple[str, int]]:
    """Parse a label file into (sample_id, class_index) pairs, in file order."""
    # Decoded from bytes so carriage returns survive to be rejected;
    # text-mode newline translation would hide them.
    text = Path(path).read_bytes().decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    seen: set[str] = set()
    out: list[tuple[str, int]] = []
    for lineno, line in enumerate(lines, start=1):
        if line.count("\t") != 1 or "\r" in line:
            raise MalformedLineError(f"{path}:{lineno}: expected `id<TAB>class`, got {line!r}")
        sample_id, class_text = line.split("\t")
        if not sample_id:
            raise MalformedLineError(f"{path}:{lineno}: empty sample id")
        if not class_text.isdigit():
            raise NonNumericClassError(
                f"{path}:{lineno}: class index must be a non-negative decimal, got {class_text!r}")
        if sample_id in seen:
            raise DuplicateSampleError(f"{path}:{lineno}: duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        out.append((sample_id, int(class_text)))
    return out


def write_labels(pairs, path) -> None:
    lines = [f"{sample_id}\t{class_index}" for sample_id, class_index in pairs]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8",
                          newline="\n")

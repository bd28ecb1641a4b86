"""Independent reference implementations used to cross-check the package.

Everything here is written directly from the definitions: scalar loops,
explicit bounds checks, a table search for binary16 rounding. None of it
shares code with the package kernels, so a test that compares the two
exercises two separately derived routes to the same answer.
"""

from __future__ import annotations

import math

import numpy as np

# All non-negative finite binary16 patterns, 0x0000 .. 0x7BFF. For
# non-negative IEEE floats, bit-pattern order equals value order, so this
# table is ascending by construction.
_POS_BITS = np.arange(0x7C00, dtype=np.uint16)
_POS_VALUES = _POS_BITS.view(np.float16).astype(np.float64)

# Half the gap between the largest finite binary16 value (65504) and the
# first value that would need a larger exponent (65536): magnitudes at or
# beyond this midpoint round away to infinity under nearest-even.
_OVERFLOW_THRESHOLD = 65520.0


def half_encode_oracle(values) -> np.ndarray:
    """Brute-force nearest-even binary16 encode by candidate search.

    For each magnitude, finds the two neighbouring finite binary16
    values in the table, keeps the nearer one, and breaks exact ties
    toward the even mantissa. Sign is reattached afterwards; NaN maps to
    the canonical quiet pattern of its sign.
    """
    with np.errstate(over="ignore"):
        v = np.atleast_1d(np.asarray(values, dtype=np.float32))
    sign = np.signbit(v)
    nan = np.isnan(v)
    mag = np.abs(v).astype(np.float64)
    mag_safe = np.where(nan, 0.0, mag)

    idx = np.searchsorted(_POS_VALUES, mag_safe, side="left")
    lo = np.clip(idx - 1, 0, _POS_BITS.size - 1)
    hi = np.clip(idx, 0, _POS_BITS.size - 1)
    d_lo = mag_safe - _POS_VALUES[lo]
    d_hi = _POS_VALUES[hi] - mag_safe
    tie_to_even = (d_hi == d_lo) & (_POS_BITS[hi] % 2 == 0)
    pick_hi = (d_hi < d_lo) | tie_to_even
    bits = np.where(pick_hi, _POS_BITS[hi], _POS_BITS[lo])

    bits = np.where(mag_safe >= _OVERFLOW_THRESHOLD, np.uint16(0x7C00), bits)
    bits = np.where(nan, np.uint16(0x7E00), bits)
    return (bits | (sign.astype(np.uint16) << np.uint16(15))).astype(np.uint16)


def half_encode_scalar(value: float) -> int:
    return int(half_encode_oracle(np.float32(value))[0])


def flat_offset(c: int, h: int, w: int, pos: tuple[int, int, int, int]) -> int:
    """Row-major NCHW offset computed from the definition."""
    n_i, c_i, y, x = pos
    return ((n_i * c + c_i) * h + y) * w + x


_F0 = np.float32(0.0)


def naive_subtract_means(x: np.ndarray, means: np.ndarray) -> np.ndarray:
    if means.size == 0:
        return x.copy()
    out = np.empty_like(x)
    n, c, h, w = x.shape
    for i in range(n):
        for ch in range(c):
            for y in range(h):
                for xx in range(w):
                    out[i, ch, y, xx] = np.float32(x[i, ch, y, xx] - means[ch])
    return out


def naive_conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                 stride: int, pad: int) -> np.ndarray:
    """Scalar seven-loop convolution, accumulating float32 in (c, ky, kx) order.

    Out-of-bounds taps contribute an explicit zero product so the
    operation sequence (and signed-zero behaviour) matches a
    zero-padded evaluation.
    """
    n, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.empty((n, o, oh, ow), dtype=np.float32)
    for i in range(n):
        for oc in range(o):
            for oy in range(oh):
                for ox in range(ow):
                    acc = _F0
                    for ic in range(c):
                        for ky in range(kh):
                            for kx in range(kw):
                                y = oy * stride + ky - pad
                                xx = ox * stride + kx - pad
                                if 0 <= y < h and 0 <= xx < wd:
                                    v = x[i, ic, y, xx]
                                else:
                                    v = _F0
                                acc = np.float32(acc + np.float32(v * w[oc, ic, ky, kx]))
                    out[i, oc, oy, ox] = np.float32(acc + b[oc])
    return out


def naive_relu(x: np.ndarray) -> np.ndarray:
    out = x.copy()
    out[out < 0] = 0.0
    return out


def naive_maxpool(x: np.ndarray, kernel: int, stride: int, pad: int) -> np.ndarray:
    n, c, h, w = x.shape
    oh = (h + 2 * pad - kernel) // stride + 1
    ow = (w + 2 * pad - kernel) // stride + 1
    out = np.empty((n, c, oh, ow), dtype=np.float32)
    for i in range(n):
        for ch in range(c):
            for oy in range(oh):
                for ox in range(ow):
                    best = np.float32(-np.inf)
                    for ky in range(kernel):
                        for kx in range(kernel):
                            y = oy * stride + ky - pad
                            xx = ox * stride + kx - pad
                            if 0 <= y < h and 0 <= xx < w:
                                v = x[i, ch, y, xx]
                                if v > best:
                                    best = v
                    out[i, ch, oy, ox] = best
    return out


def naive_avgpool_global(x: np.ndarray) -> np.ndarray:
    n, c, h, w = x.shape
    out = np.empty((n, c, 1, 1), dtype=np.float32)
    denom = np.float32(h * w)
    for i in range(n):
        for ch in range(c):
            acc = _F0
            for y in range(h):
                for xx in range(w):
                    acc = np.float32(acc + x[i, ch, y, xx])
            out[i, ch, 0, 0] = np.float32(acc / denom)
    return out


def naive_dense(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    flat = x.reshape(n, -1)
    o, k = w.shape
    out = np.empty((n, o, 1, 1), dtype=np.float32)
    for i in range(n):
        for f in range(o):
            acc = _F0
            for j in range(k):
                acc = np.float32(acc + np.float32(w[f, j] * flat[i, j]))
            out[i, f, 0, 0] = np.float32(acc + b[f])
    return out


def naive_softmax(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    flat = x.reshape(n, -1)
    out = np.empty_like(flat)
    for i in range(n):
        row = flat[i]
        m = float(max(float(v) for v in row))
        exps = [math.exp(float(v) - m) for v in row]
        total = 0.0
        for e in exps:
            total += e
        for j, e in enumerate(exps):
            out[i, j] = np.float32(e / total)
    return out.reshape(x.shape)


def naive_concat(parts: list[np.ndarray]) -> np.ndarray:
    n, _, h, w = parts[0].shape
    total_c = sum(p.shape[1] for p in parts)
    out = np.empty((n, total_c, h, w), dtype=np.float32)
    at = 0
    for p in parts:
        out[:, at:at + p.shape[1]] = p
        at += p.shape[1]
    return out


def naive_forward_fp32(graph, x: np.ndarray) -> dict[str, np.ndarray]:
    """Binary32 forward pass composed purely from the naive kernels.

    Walks graph.layers (already topologically ordered) and slices the
    weight blob by the manifest offsets. Returns every layer's output.
    """
    x = naive_subtract_means(x, graph.channel_means)
    produced: dict[str, np.ndarray] = {}

    blob = graph.weights
    for spec in graph.layers:
        ins = [x] if not spec.inputs else [produced[r] for r in spec.inputs]
        if spec.kind == "conv2d":
            in_c = ins[0].shape[1]
            count = spec.out_channels * in_c * spec.kernel_h * spec.kernel_w
            w = blob[spec.weight_offset:spec.weight_offset + count].reshape(
                spec.out_channels, in_c, spec.kernel_h, spec.kernel_w)
            b = blob[spec.bias_offset:spec.bias_offset + spec.out_channels]
            y = naive_conv2d(ins[0], w, b, spec.stride, spec.pad)
        elif spec.kind == "relu":
            y = naive_relu(ins[0])
        elif spec.kind == "maxpool":
            y = naive_maxpool(ins[0], spec.kernel, spec.stride, spec.pad)
        elif spec.kind == "avgpool_global":
            y = naive_avgpool_global(ins[0])
        elif spec.kind == "dense":
            per_sample = ins[0][0].size
            count = spec.out_features * per_sample
            w = blob[spec.weight_offset:spec.weight_offset + count].reshape(
                spec.out_features, per_sample)
            b = blob[spec.bias_offset:spec.bias_offset + spec.out_features]
            y = naive_dense(ins[0], w, b)
        elif spec.kind == "softmax":
            y = naive_softmax(ins[0])
        else:
            y = naive_concat(ins)
        produced[spec.layer_id] = y
    return produced

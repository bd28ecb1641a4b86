"""Forward inference in binary32 and two emulated binary16 modes.

Precision modes:

* FP32: everything in binary32.
* FP16_LAYER: weights and activations are rounded through binary16, the
  arithmetic inside a layer accumulates in binary32, and each layer's
  output is rounded through binary16 again. This models an accelerator
  that stores binary16 but carries wider accumulators.
* FP16_STRICT: like FP16_LAYER, but the running sum is additionally
  rounded through binary16 after every multiply-accumulate. A pessimistic
  bound for hardware with pure binary16 accumulators.

Accumulation order is part of the contract so that independently written
reference code can reproduce results bit-for-bit: convolutions sum over
(in_channel, kernel_row, kernel_col) sequentially, dense layers over the
flattened input index, global average pooling over (row, col), and the
product feeding each accumulate step is rounded once (no fused widening).
Bias is added after the accumulation loop. Softmax subtracts the max
logit, evaluates exp and the normalizing sum in float64 with libm, and
rounds each quotient once to binary32. Softmax is never computed in
binary16, and its output is the one layer output the FP16 modes leave
in binary32: confidences always sum to 1 within binary32 rounding.

The implementation vectorizes over output positions with numpy slices;
each slice step performs exactly one rounding per element, so results
equal a scalar seven-loop evaluation in the pinned order.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

import numpy as np

from . import half16
from .errors import NonSoftmaxOutputError, ShapeMismatchError
from .netgraph import LayerSpec, NetworkGraph
from .tensors import Tensor


class PrecisionMode(enum.Enum):
    FP32 = "fp32"
    FP16_LAYER = "fp16_layer"
    FP16_STRICT = "fp16_strict"


@dataclass(frozen=True)
class LayerTiming:
    """Wall time one layer took during a forward pass."""

    layer_id: str
    nanoseconds: int


def subtract_means(x: np.ndarray, means: np.ndarray) -> np.ndarray:
    """Subtract one mean per channel. An empty means array is a no-op."""
    if means.size == 0:
        return x
    c = x.shape[1]
    if means.size != c:
        raise ShapeMismatchError(f"{means.size} means for {c} channels")
    return x - means.reshape(1, c, 1, 1)


def layer_conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                 stride: int, pad: int, mode: PrecisionMode) -> np.ndarray:
    """Direct convolution, binary32 accumulation in (c, ky, kx) order."""
    strict = mode is PrecisionMode.FP16_STRICT
    n, c, h, w = x.shape
    out_c, _, kh, kw = weights.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = np.empty((n, out_c, oh, ow), dtype=np.float32)
    for i in range(n):
        for oc in range(out_c):
            acc = np.zeros((oh, ow), dtype=np.float32)
            for ic in range(c):
                for ky in range(kh):
                    for kx in range(kw):
                        window = x[i, ic,
                                   ky:ky + stride * (oh - 1) + 1:stride,
                                   kx:kx + stride * (ow - 1) + 1:stride]
                        if strict:
                            acc = half16.quantize_array(acc + window * weights[oc, ic, ky, kx])
                        else:
                            acc += window * weights[oc, ic, ky, kx]
            out[i, oc] = acc + bias[oc]
    return out


def layer_relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def layer_maxpool(x: np.ndarray, kernel: int, stride: int, pad: int) -> np.ndarray:
    """Max over each window. Padding cells never win (filled with -inf)."""
    n, c, h, w = x.shape
    oh = (h + 2 * pad - kernel) // stride + 1
    ow = (w + 2 * pad - kernel) // stride + 1
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)),
                   constant_values=-np.inf)
    out = np.full((n, c, oh, ow), -np.inf, dtype=np.float32)
    for ky in range(kernel):
        for kx in range(kernel):
            window = x[:, :,
                       ky:ky + stride * (oh - 1) + 1:stride,
                       kx:kx + stride * (ow - 1) + 1:stride]
            np.maximum(out, window, out=out)
    return out


def layer_avgpool_global(x: np.ndarray) -> np.ndarray:
    """Mean over the full spatial extent, summed in (row, col) order."""
    n, c, h, w = x.shape
    acc = np.zeros((n, c), dtype=np.float32)
    for y in range(h):
        for xx in range(w):
            acc += x[:, :, y, xx]
    return (acc / np.float32(h * w)).reshape(n, c, 1, 1)


def layer_dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                mode: PrecisionMode) -> np.ndarray:
    """Fully connected layer over the flattened input, accumulated in index order."""
    strict = mode is PrecisionMode.FP16_STRICT
    n = x.shape[0]
    flat = x.reshape(n, -1)
    out_features, in_features = weights.shape
    out = np.empty((n, out_features), dtype=np.float32)
    for i in range(n):
        acc = np.zeros(out_features, dtype=np.float32)
        row = flat[i]
        for j in range(in_features):
            if strict:
                acc = half16.quantize_array(acc + weights[:, j] * row[j])
            else:
                acc += weights[:, j] * row[j]
        out[i] = acc + bias
    return out.reshape(n, out_features, 1, 1)


def layer_softmax(x: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over all elements of each batch item."""
    n = x.shape[0]
    flat = x.reshape(n, -1)
    out = np.empty_like(flat)
    for i in range(n):
        row = flat[i]
        m = float(row.max())
        exps = [math.exp(float(v) - m) for v in row]
        total = 0.0
        for e in exps:
            total += e
        out[i] = np.asarray([np.float32(e / total) for e in exps], dtype=np.float32)
    return out.reshape(x.shape)


def layer_concat(parts: list[np.ndarray]) -> np.ndarray:
    """Concatenate along the channel axis, in declared input order."""
    return np.concatenate(parts, axis=1)


def _weight_views(graph: NetworkGraph, spec: LayerSpec, in_shape) -> tuple[np.ndarray, np.ndarray]:
    blob = graph.weights
    if spec.kind == "conv2d":
        length = spec.out_channels * in_shape.c * spec.kernel_h * spec.kernel_w
        w = blob[spec.weight_offset:spec.weight_offset + length]
        w = w.reshape(spec.out_channels, in_shape.c, spec.kernel_h, spec.kernel_w)
        b = blob[spec.bias_offset:spec.bias_offset + spec.out_channels]
    else:
        length = spec.out_features * in_shape.count
        w = blob[spec.weight_offset:spec.weight_offset + length]
        w = w.reshape(spec.out_features, in_shape.count)
        b = blob[spec.bias_offset:spec.bias_offset + spec.out_features]
    return w, b


def _run_layers(graph: NetworkGraph, x: np.ndarray, mode: PrecisionMode,
                timings: list[LayerTiming] | None) -> dict[str, np.ndarray]:
    fp16 = mode is not PrecisionMode.FP32
    outputs: dict[str, np.ndarray] = {}

    def feeds(spec: LayerSpec) -> list[np.ndarray]:
        if not spec.inputs:
            return [x]
        return [outputs[ref] for ref in spec.inputs]

    def feed_shape(spec: LayerSpec):
        return graph.shapes[spec.inputs[0]] if spec.inputs else graph.input_shape

    for spec in graph.layers:
        started = time.perf_counter_ns()
        ins = feeds(spec)
        if spec.kind == "conv2d":
            w, b = _weight_views(graph, spec, feed_shape(spec))
            if fp16:
                w = half16.quantize_array(w)
                b = half16.quantize_array(b)
            y = layer_conv2d(ins[0], w, b, spec.stride, spec.pad, mode)
        elif spec.kind == "relu":
            y = layer_relu(ins[0])
        elif spec.kind == "maxpool":
            y = layer_maxpool(ins[0], spec.kernel, spec.stride, spec.pad)
        elif spec.kind == "avgpool_global":
            y = layer_avgpool_global(ins[0])
        elif spec.kind == "dense":
            w, b = _weight_views(graph, spec, feed_shape(spec))
            if fp16:
                w = half16.quantize_array(w)
                b = half16.quantize_array(b)
            y = layer_dense(ins[0], w, b, mode)
        elif spec.kind == "softmax":
            y = layer_softmax(ins[0])
        else:
            y = layer_concat(ins)
        # Confidences stay binary32 even in the half-precision modes;
        # rounding them to binary16 would break the sum-to-one guarantee.
        if fp16 and spec.kind != "softmax":
            y = half16.quantize_array(y)
        if timings is not None:
            timings.append(LayerTiming(spec.layer_id, time.perf_counter_ns() - started))
        outputs[spec.layer_id] = y
    return outputs


def _prepare_input(graph: NetworkGraph, tensor: Tensor, mode: PrecisionMode) -> np.ndarray:
    if tensor.shape != graph.input_shape:
        raise ShapeMismatchError(
            f"input shape {tensor.shape} does not match the graph input {graph.input_shape}")
    x = subtract_means(tensor.array, graph.channel_means)
    if mode is not PrecisionMode.FP32:
        x = half16.quantize_array(x)
    return x


def forward(graph: NetworkGraph, tensor: Tensor,
            mode: PrecisionMode = PrecisionMode.FP32,
            ) -> tuple[np.ndarray, list[LayerTiming]]:
    """Run one input through the graph.

    Returns the flattened softmax output (binary32 confidences) and the
    per-layer wall times. Deterministic: the same graph, input and mode
    always produce bit-identical confidences.
    """
    if graph.output_layer.kind != "softmax":
        raise NonSoftmaxOutputError(
            f"output layer {graph.output_layer.layer_id!r} is "
            f"{graph.output_layer.kind!r}, expected softmax")
    x = _prepare_input(graph, tensor, mode)
    timings: list[LayerTiming] = []
    outputs = _run_layers(graph, x, mode, timings)
    confidences = outputs[graph.output_layer.layer_id].reshape(-1).copy()
    return confidences, timings


def forward_activations(graph: NetworkGraph, tensor: Tensor,
                        mode: PrecisionMode = PrecisionMode.FP32,
                        ) -> dict[str, np.ndarray]:
    """Like forward, but return every layer's output, keyed by layer id.

    Exists for debugging and for verifying runtime shapes against the
    static inference; does not require a softmax output layer.
    """
    x = _prepare_input(graph, tensor, mode)
    return _run_layers(graph, x, mode, None)

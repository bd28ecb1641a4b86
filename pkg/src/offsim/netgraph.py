"""Network manifests: parsing, DAG validation, and static shape inference.

A network is described by two files. The manifest is JSON:

    {
      "input": {"c": 3, "h": 224, "w": 224},
      "means": [104.0, 117.0, 123.0],
      "layers": [
        {"id": "conv1", "kind": "conv2d", "inputs": [],
         "out_channels": 64, "kernel_h": 7, "kernel_w": 7,
         "stride": 2, "pad": 3, "weight_offset": 0, "bias_offset": 9408},
        {"id": "relu1", "kind": "relu", "inputs": ["conv1"]},
        ...
      ]
    }

The weight blob is a headerless file of little-endian binary32 values.
Offsets in the manifest count values (not bytes) from the start of the
blob. Convolution weights are laid out [out_ch][in_ch][kh][kw] row-major
and dense weights [out_features][in_features]; biases are one value per
output channel / feature.

An empty `inputs` list marks the layer that consumes the network input;
exactly one layer may do so, and exactly one layer must be consumed by
nobody (the output). Layers may appear in any order; loading establishes
a deterministic topological order (manifest order among ready layers).
`means` is optional and, when present, must have one value per input
channel. Batch size is always 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CyclicGraphError,
    DanglingLayerRefError,
    SchemaViolationError,
    ShapeMismatchError,
    UnknownLayerKindError,
    WeightBlobOverrunError,
)
from .tensors import Shape

LAYER_KINDS = ("conv2d", "relu", "maxpool", "avgpool_global", "dense", "softmax", "concat")


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the graph. Fields beyond the common three are kind-specific."""

    layer_id: str
    kind: str
    inputs: tuple[str, ...]
    out_channels: int | None = None
    kernel_h: int | None = None
    kernel_w: int | None = None
    kernel: int | None = None
    stride: int | None = None
    pad: int | None = None
    out_features: int | None = None
    weight_offset: int | None = None
    bias_offset: int | None = None


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """A validated, topologically ordered network plus its weights.

    `shapes` maps every layer id to its inferred output shape; the last
    entry of `layers` is always the output layer.
    """

    input_shape: Shape
    channel_means: np.ndarray
    layers: tuple[LayerSpec, ...]
    weights: np.ndarray
    shapes: dict[str, Shape]

    @property
    def output_layer(self) -> LayerSpec:
        return self.layers[-1]

    @property
    def output_shape(self) -> Shape:
        return self.shapes[self.output_layer.layer_id]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaViolationError(message)


def _get_int(obj: dict, layer_id: str, key: str, minimum: int) -> int:
    _require(key in obj, f"layer {layer_id!r}: missing field {key!r}")
    value = obj[key]
    _require(isinstance(value, int) and not isinstance(value, bool),
             f"layer {layer_id!r}: field {key!r} must be an integer, got {value!r}")
    _require(value >= minimum,
             f"layer {layer_id!r}: field {key!r} must be >= {minimum}, got {value}")
    return value


_KIND_FIELDS = {
    "conv2d": ("out_channels", "kernel_h", "kernel_w", "stride", "pad",
               "weight_offset", "bias_offset"),
    "relu": (),
    "maxpool": ("kernel", "stride", "pad"),
    "avgpool_global": (),
    "dense": ("out_features", "weight_offset", "bias_offset"),
    "softmax": (),
    "concat": (),
}

_FIELD_MINIMUM = {
    "out_channels": 1, "kernel_h": 1, "kernel_w": 1, "kernel": 1,
    "stride": 1, "pad": 0, "out_features": 1,
    "weight_offset": 0, "bias_offset": 0,
}


def _parse_layer(obj) -> LayerSpec:
    _require(isinstance(obj, dict), f"layer entries must be objects, got {obj!r}")
    _require("id" in obj, "layer missing field 'id'")
    layer_id = obj["id"]
    _require(isinstance(layer_id, str) and layer_id, f"layer id must be a non-empty string, got {layer_id!r}")
    _require("kind" in obj, f"layer {layer_id!r}: missing field 'kind'")
    kind = obj["kind"]
    _require(isinstance(kind, str), f"layer {layer_id!r}: kind must be a string")
    if kind not in LAYER_KINDS:
        raise UnknownLayerKindError(f"layer {layer_id!r}: unknown kind {kind!r}")
    raw_inputs = obj.get("inputs", [])
    _require(isinstance(raw_inputs, list) and all(isinstance(i, str) and i for i in raw_inputs),
             f"layer {layer_id!r}: inputs must be a list of layer ids")
    inputs = tuple(raw_inputs)
    _require(len(set(inputs)) == len(inputs), f"layer {layer_id!r}: repeated input reference")
    if kind != "concat":
        _require(len(inputs) <= 1,
                 f"layer {layer_id!r}: kind {kind!r} takes a single input, got {len(inputs)}")
    fields = {}
    for key in _KIND_FIELDS[kind]:
        fields[key] = _get_int(obj, layer_id, key, _FIELD_MINIMUM[key])
    return LayerSpec(layer_id=layer_id, kind=kind, inputs=inputs, **fields)


def _toposort(layers: list[LayerSpec]) -> list[LayerSpec]:
    """Kahn's algorithm, preferring manifest order among ready layers."""
    consumers: dict[str, list[int]] = {spec.layer_id: [] for spec in layers}
    indegree = [0] * len(layers)
    for i, spec in enumerate(layers):
        indegree[i] = len(spec.inputs)
        for ref in spec.inputs:
            consumers[ref].append(i)
    ready = sorted(i for i, d in enumerate(indegree) if d == 0)
    order: list[LayerSpec] = []
    while ready:
        i = ready.pop(0)
        order.append(layers[i])
        changed = False
        for j in consumers[layers[i].layer_id]:
            indegree[j] -= 1
            if indegree[j] == 0:
                ready.append(j)
                changed = True
        if changed:
            ready.sort()
    if len(order) != len(layers):
        stuck = sorted(spec.layer_id for i, spec in enumerate(layers) if indegree[i] > 0)
        raise CyclicGraphError(f"cycle through layers {stuck}")
    return order


def _infer_shapes(input_shape: Shape, layers: list[LayerSpec]) -> dict[str, Shape]:
    shapes: dict[str, Shape] = {}

    def shape_of(spec: LayerSpec) -> list[Shape]:
        if not spec.inputs:
            return [input_shape]
        return [shapes[ref] for ref in spec.inputs]

    for spec in layers:
        ins = shape_of(spec)
        if spec.kind == "conv2d":
            s = ins[0]
            oh = _window_extent(spec.layer_id, s.h, spec.kernel_h, spec.stride, spec.pad)
            ow = _window_extent(spec.layer_id, s.w, spec.kernel_w, spec.stride, spec.pad)
            shapes[spec.layer_id] = Shape(s.n, spec.out_channels, oh, ow)
        elif spec.kind == "maxpool":
            s = ins[0]
            if spec.pad >= spec.kernel:
                raise ShapeMismatchError(
                    f"layer {spec.layer_id!r}: pad {spec.pad} must be smaller than kernel {spec.kernel}")
            oh = _window_extent(spec.layer_id, s.h, spec.kernel, spec.stride, spec.pad)
            ow = _window_extent(spec.layer_id, s.w, spec.kernel, spec.stride, spec.pad)
            shapes[spec.layer_id] = Shape(s.n, s.c, oh, ow)
        elif spec.kind == "avgpool_global":
            s = ins[0]
            if s.h < 1 or s.w < 1:
                raise ShapeMismatchError(f"layer {spec.layer_id!r}: empty spatial extent")
            shapes[spec.layer_id] = Shape(s.n, s.c, 1, 1)
        elif spec.kind == "dense":
            s = ins[0]
            if s.count < 1:
                raise ShapeMismatchError(f"layer {spec.layer_id!r}: empty input")
            shapes[spec.layer_id] = Shape(s.n, spec.out_features, 1, 1)
        elif spec.kind == "concat":
            first = ins[0]
            for other in ins[1:]:
                if (other.n, other.h, other.w) != (first.n, first.h, first.w):
                    raise ShapeMismatchError(
                        f"layer {spec.layer_id!r}: concat inputs disagree on spatial shape")
            shapes[spec.layer_id] = Shape(first.n, sum(s.c for s in ins), first.h, first.w)
        else:  # relu, softmax
            shapes[spec.layer_id] = ins[0]
    return shapes


def _window_extent(layer_id: str, extent: int, kernel: int, stride: int, pad: int) -> int:
    padded = extent + 2 * pad
    if padded < kernel:
        raise ShapeMismatchError(
            f"layer {layer_id!r}: kernel {kernel} exceeds padded extent {padded}")
    return (padded - kernel) // stride + 1


def _check_weight_bounds(layers: list[LayerSpec], shapes: dict[str, Shape],
                         input_shape: Shape, blob_len: int) -> None:
    def input_shape_of(spec: LayerSpec) -> Shape:
        return shapes[spec.inputs[0]] if spec.inputs else input_shape

    for spec in layers:
        if spec.kind == "conv2d":
            in_c = input_shape_of(spec).c
            spans = [(spec.weight_offset, spec.out_channels * in_c * spec.kernel_h * spec.kernel_w),
                     (spec.bias_offset, spec.out_channels)]
        elif spec.kind == "dense":
            spans = [(spec.weight_offset, spec.out_features * input_shape_of(spec).count),
                     (spec.bias_offset, spec.out_features)]
        else:
            continue
        for offset, length in spans:
            if offset + length > blob_len:
                raise WeightBlobOverrunError(
                    f"layer {spec.layer_id!r}: needs values [{offset}, {offset + length}) "
                    f"but the blob holds {blob_len}")


def parse_manifest(manifest_bytes: bytes, weight_blob: bytes) -> NetworkGraph:
    """Build a validated NetworkGraph from raw manifest and weight bytes."""
    try:
        doc = json.loads(manifest_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaViolationError(f"manifest is not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "manifest root must be an object")
    _require("input" in doc, "manifest missing field 'input'")
    inp = doc["input"]
    _require(isinstance(inp, dict), "'input' must be an object")
    dims = {}
    for key in ("c", "h", "w"):
        _require(key in inp, f"'input' missing dimension {key!r}")
        value = inp[key]
        _require(isinstance(value, int) and not isinstance(value, bool) and value >= 1,
                 f"input dimension {key!r} must be a positive integer, got {value!r}")
        dims[key] = value
    input_shape = Shape(1, dims["c"], dims["h"], dims["w"])

    raw_means = doc.get("means", [])
    _require(isinstance(raw_means, list) and all(isinstance(m, (int, float)) and not isinstance(m, bool)
                                                 for m in raw_means),
             "'means' must be a list of numbers")
    _require(len(raw_means) in (0, input_shape.c),
             f"'means' must be empty or hold {input_shape.c} values, got {len(raw_means)}")
    means = np.asarray(raw_means, dtype=np.float32)
    means.setflags(write=False)

    _require("layers" in doc, "manifest missing field 'layers'")
    raw_layers = doc["layers"]
    _require(isinstance(raw_layers, list) and raw_layers, "'layers' must be a non-empty list")
    parsed = [_parse_layer(obj) for obj in raw_layers]

    ids = [spec.layer_id for spec in parsed]
    _require(len(set(ids)) == len(ids), "layer ids must be unique")
    known = set(ids)
    for spec in parsed:
        for ref in spec.inputs:
            if ref not in known:
                raise DanglingLayerRefError(
                    f"layer {spec.layer_id!r}: input {ref!r} names no layer")

    sources = [spec.layer_id for spec in parsed if not spec.inputs]
    _require(len(sources) == 1,
             f"graph must have exactly one layer reading the network input, got {sources}")
    referenced = {ref for spec in parsed for ref in spec.inputs}
    sinks = [spec.layer_id for spec in parsed if spec.layer_id not in referenced]
    _require(len(sinks) == 1,
             f"graph must have exactly one output layer, got {sinks}")

    ordered = _toposort(parsed)
    shapes = _infer_shapes(input_shape, ordered)

    if len(weight_blob) % 4 != 0:
        raise WeightBlobOverrunError(
            f"weight blob length {len(weight_blob)} is not a multiple of 4")
    weights = np.frombuffer(weight_blob, dtype="<f4")
    _check_weight_bounds(ordered, shapes, input_shape, weights.size)

    return NetworkGraph(input_shape=input_shape, channel_means=means,
                        layers=tuple(ordered), weights=weights, shapes=shapes)


def load_manifest(manifest_path, weights_path) -> NetworkGraph:
    """Load and validate a manifest plus weight blob from disk."""
    return parse_manifest(Path(manifest_path).read_bytes(), Path(weights_path).read_bytes())


def infer_shapes(graph: NetworkGraph) -> dict[str, Shape]:
    """Recompute the per-layer output shapes of a loaded graph."""
    return _infer_shapes(graph.input_shape, list(graph.layers))

"""Deterministic synthetic fixtures: a small network plus a labeled dataset.

Two presets exist. "random" draws weights and inputs from a seeded
uniform generator; its labels are the binary32 argmax of each sample, so
binary32 inference scores a top-1 error of exactly zero on it by
construction. "fp16_exact" builds a network whose every intermediate
value is an integer small enough to be exact in binary16 and whose
logits are spread so far apart that softmax saturates to a one-hot
vector; binary32 and layer-quantized binary16 inference then agree
bit-for-bit, which makes it a fixture for verifying that the emulation
itself introduces no error.

The same seed always reproduces byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import PrecisionMode, forward
from .netgraph import NetworkGraph, parse_manifest
from .tensors import Tensor, write_labels, write_tensor_file

PRESETS = ("random", "fp16_exact")

# fp16_exact logit construction: class j scores BASE_STEP * (9 - j), plus
# BONUS when its assigned feature fires. All attainable logits are then
# distinct multiples-plus-offsets no closer than BASE_STEP, every value is
# an integer <= 2033 (exact in binary16), and exp(-BASE_STEP) underflows
# binary32 to zero, so softmax saturates exactly.
_BASE_STEP = 107.0
_BONUS = 1070.0


@dataclass(frozen=True)
class FixtureSpec:
    samples: int = 500
    preset: str = "random"

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {PRESETS}, got {self.preset!r}")


@dataclass(frozen=True)
class FixturePaths:
    root: Path
    manifest: Path
    weights: Path
    dataset_dir: Path
    labels: Path
    config: Path


def _random_network(rng: np.random.Generator) -> tuple[dict, np.ndarray]:
    conv_w = rng.uniform(-0.5, 0.5, size=8 * 1 * 3 * 3)
    conv_b = rng.uniform(-0.1, 0.1, size=8)
    dense_w = rng.uniform(-0.4, 0.4, size=10 * 8 * 7 * 7)
    dense_b = rng.uniform(-0.1, 0.1, size=10)
    blob = np.concatenate([conv_w, conv_b, dense_w, dense_b]).astype(np.float32)
    manifest = {
        "input": {"c": 1, "h": 16, "w": 16},
        "means": [0.5],
        "layers": [
            {"id": "conv1", "kind": "conv2d", "inputs": [],
             "out_channels": 8, "kernel_h": 3, "kernel_w": 3, "stride": 1, "pad": 0,
             "weight_offset": 0, "bias_offset": 72},
            {"id": "relu1", "kind": "relu", "inputs": ["conv1"]},
            {"id": "pool1", "kind": "maxpool", "inputs": ["relu1"],
             "kernel": 2, "stride": 2, "pad": 0},
            {"id": "fc1", "kind": "dense", "inputs": ["pool1"],
             "out_features": 10, "weight_offset": 80, "bias_offset": 4000},
            {"id": "prob", "kind": "softmax", "inputs": ["fc1"]},
        ],
    }
    return manifest, blob


def _fp16_exact_network() -> tuple[dict, np.ndarray]:
    conv_w = np.zeros((4, 1, 3, 3), dtype=np.float32)
    taps = [(0, 0), (0, 2), (2, 0), (2, 2)]
    for ch, (ty, tx) in enumerate(taps):
        conv_w[ch, 0, ty, tx] = 1.0
    conv_b = np.zeros(4, dtype=np.float32)
    dense_w = np.zeros((10, 4 * 3 * 3), dtype=np.float32)
    dense_b = np.empty(10, dtype=np.float32)
    for j in range(10):
        dense_w[j, j] = _BONUS
        dense_b[j] = _BASE_STEP * (9 - j)
    blob = np.concatenate([conv_w.reshape(-1), conv_b, dense_w.reshape(-1), dense_b])
    manifest = {
        "input": {"c": 1, "h": 8, "w": 8},
        "layers": [
            {"id": "conv1", "kind": "conv2d", "inputs": [],
             "out_channels": 4, "kernel_h": 3, "kernel_w": 3, "stride": 1, "pad": 0,
             "weight_offset": 0, "bias_offset": 36},
            {"id": "relu1", "kind": "relu", "inputs": ["conv1"]},
            {"id": "pool1", "kind": "maxpool", "inputs": ["relu1"],
             "kernel": 2, "stride": 2, "pad": 0},
            {"id": "fc1", "kind": "dense", "inputs": ["pool1"],
             "out_features": 10, "weight_offset": 40, "bias_offset": 400},
            {"id": "prob", "kind": "softmax", "inputs": ["fc1"]},
        ],
    }
    return manifest, blob.astype(np.float32)


def _draw_input(rng: np.random.Generator, preset: str, shape) -> np.ndarray:
    if preset == "random":
        return rng.uniform(0.0, 1.0, size=shape).astype(np.float32)
    return rng.integers(0, 2, size=shape).astype(np.float32)


def _default_config(spec: FixtureSpec) -> dict:
    return {
        "manifest": "manifest.json",
        "weights": "weights.bin",
        "dataset": "tensors",
        "labels": "labels.tsv",
        "devices": [
            {"kind": "host_fp32", "count": 1},
            {"kind": "sim_vpu_fp16", "count": 1},
        ],
        "batch_sizes": [1],
        "subset_size": min(100, spec.samples),
        "repetitions": 1,
        "out": "results.csv",
        "seed": 0,
    }


def generate_fixture(out_dir, seed: int, spec: FixtureSpec = FixtureSpec()) -> FixturePaths:
    """Write manifest, weights, dataset tensors, labels and a run config.

    Labels are the binary32 argmax of each generated sample, computed by
    actually running the network.
    """
    root = Path(out_dir)
    dataset_dir = root / "tensors"
    dataset_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    if spec.preset == "random":
        manifest, blob = _random_network(rng)
    else:
        manifest, blob = _fp16_exact_network()

    manifest_bytes = (json.dumps(manifest, indent=2) + "\n").encode("utf-8")
    blob_bytes = blob.astype("<f4").tobytes()
    graph: NetworkGraph = parse_manifest(manifest_bytes, blob_bytes)

    paths = FixturePaths(
        root=root,
        manifest=root / "manifest.json",
        weights=root / "weights.bin",
        dataset_dir=dataset_dir,
        labels=root / "labels.tsv",
        config=root / "config.json",
    )
    paths.manifest.write_bytes(manifest_bytes)
    paths.weights.write_bytes(blob_bytes)

    in_shape = graph.input_shape.as_tuple()
    labels: list[tuple[str, int]] = []
    for i in range(spec.samples):
        sample_id = f"s{i:05d}"
        tensor = Tensor(_draw_input(rng, spec.preset, in_shape))
        write_tensor_file(tensor, dataset_dir / f"{sample_id}.ntsr")
        confidences, _ = forward(graph, tensor, PrecisionMode.FP32)
        labels.append((sample_id, int(np.argmax(confidences))))
    write_labels(labels, paths.labels)

    paths.config.write_text(json.dumps(_default_config(spec), indent=2) + "\n",
                            encoding="utf-8")
    return paths

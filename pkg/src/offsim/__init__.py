"""Simulated accelerator offload benchmark toolkit.

Emulates half-precision neural inference accelerators on the host:
a binary16 codec, a small CNN inference engine with selectable precision
modes, simulated devices behind a load/get-result queue protocol, a
round-robin pipelined batch scheduler, and the metrics used to report
throughput, power efficiency and accuracy.
"""

from .device import (DeviceDescriptor, DeviceHandle, DeviceKind, close_device,
                     get_result, load_tensor, open_device)
from .engine import LayerTiming, PrecisionMode, forward, forward_activations
from .half16 import decode, encode, quantize
from .netgraph import LayerSpec, NetworkGraph, infer_shapes, load_manifest, parse_manifest
from .scheduler import BatchResult, Job, JobResult, run_batch, run_grouped
from .tensors import (Shape, Tensor, read_labels, read_tensor_file,
                      write_labels, write_tensor_file)

__version__ = "0.1.0"

__all__ = [
    "DeviceDescriptor", "DeviceHandle", "DeviceKind", "close_device",
    "get_result", "load_tensor", "open_device",
    "LayerTiming", "PrecisionMode", "forward", "forward_activations",
    "decode", "encode", "quantize",
    "LayerSpec", "NetworkGraph", "infer_shapes", "load_manifest", "parse_manifest",
    "BatchResult", "Job", "JobResult", "run_batch", "run_grouped",
    "Shape", "Tensor", "read_labels", "read_tensor_file",
    "write_labels", "write_tensor_file",
]

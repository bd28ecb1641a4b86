"""Simulated offload devices.

A handle models an accelerator reached over a slow link: load_tensor
charges the transfer time on the caller's timeline and returns as soon
as the input is queued, get_result blocks until the oldest outstanding
job finishes. At most queue_capacity jobs may be in flight (loaded and
not yet retrieved); a further load blocks until get_result frees a slot.
Results always come back in load order.

Three device kinds exist:

* host_fp32 runs the graph in binary32. Default TDP 80 W.
* sim_vpu_fp16 rounds the input through binary16 and runs the graph in
  the layer-quantized binary16 mode. Default TDP 2.5 W.
* synthetic_delay sleeps for a fixed service time and returns a uniform
  confidence vector. It exists so scheduling experiments can model a
  device with a known service rate; default TDP 2.5 W.

Each handle starts one worker thread that executes jobs serially, so a
transfer can overlap the previous job's execution but two executions on
one device never overlap. A handle expects a single client thread; the
scheduler guarantees that. The busy-window total is tracked per handle
and tdp_watts * busy_seconds serves as the energy proxy.
"""

from __future__ import annotations

import enum
import queue
import threading
import time
from dataclasses import dataclass

import numpy as np

from . import half16
from .engine import LayerTiming, PrecisionMode, forward
from .errors import DeviceClosedError, NoJobInFlightError, ShapeMismatchError
from .netgraph import NetworkGraph
from .tensors import Tensor


class DeviceKind(enum.Enum):
    HOST_FP32 = "host_fp32"
    SIM_VPU_FP16 = "sim_vpu_fp16"
    SYNTHETIC_DELAY = "synthetic_delay"


DEFAULT_TDP_WATTS = {
    DeviceKind.HOST_FP32: 80.0,
    DeviceKind.SIM_VPU_FP16: 2.5,
    DeviceKind.SYNTHETIC_DELAY: 2.5,
}

DEFAULT_QUEUE_CAPACITY = 2


@dataclass(frozen=True)
class DeviceDescriptor:
    """Static description of one simulated device.

    tdp_watts defaults by kind when omitted. transfer_bytes_per_sec of
    None means the link is infinitely fast. service_ms is required for
    synthetic_delay devices and ignored by the computing kinds.
    """

    kind: DeviceKind
    tdp_watts: float | None = None
    transfer_bytes_per_sec: float | None = None
    service_ms: float | None = None
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY

    def __post_init__(self) -> None:
        if not isinstance(self.kind, DeviceKind):
            raise ValueError(f"kind must be a DeviceKind, got {self.kind!r}")
        if self.tdp_watts is None:
            object.__setattr__(self, "tdp_watts", DEFAULT_TDP_WATTS[self.kind])
        if not self.tdp_watts > 0:
            raise ValueError(f"tdp_watts must be positive, got {self.tdp_watts!r}")
        if self.transfer_bytes_per_sec is not None and not self.transfer_bytes_per_sec > 0:
            raise ValueError("transfer_bytes_per_sec must be positive or None")
        if self.kind is DeviceKind.SYNTHETIC_DELAY:
            if self.service_ms is None or self.service_ms < 0:
                raise ValueError("synthetic_delay requires a non-negative service_ms")
        if not (isinstance(self.queue_capacity, int) and self.queue_capacity >= 1):
            raise ValueError(f"queue_capacity must be an integer >= 1, got {self.queue_capacity!r}")


_SHUTDOWN = object()


class DeviceHandle:
    """An open device. Use open_device, or construct directly."""

    def __init__(self, descriptor: DeviceDescriptor, graph: NetworkGraph):
        self.descriptor = descriptor
        self.graph = graph
        self._slots = threading.Semaphore(descriptor.queue_capacity)
        self._jobs: queue.SimpleQueue = queue.SimpleQueue()
        self._results: queue.SimpleQueue = queue.SimpleQueue()
        self._state = threading.Lock()
        self._closed = False
        self._in_flight = 0
        self._busy_ns = 0
        self._worker = threading.Thread(target=self._drain, daemon=True,
                                        name=f"device-{descriptor.kind.value}")
        self._worker.start()

    def load_tensor(self, tensor: Tensor, tag=None) -> None:
        """Queue one input for execution.

        Sleeps for the simulated transfer time, then blocks while the
        device already has queue_capacity jobs in flight. Returns once
        the job is queued; it has not necessarily started executing.
        """
        with self._state:
            if self._closed:
                raise DeviceClosedError("load_tensor on a closed device")
        if tensor.shape != self.graph.input_shape:
            raise ShapeMismatchError(
                f"input shape {tensor.shape} does not match the graph input "
                f"{self.graph.input_shape}")
        rate = self.descriptor.transfer_bytes_per_sec
        if rate is not None:
            time.sleep(tensor.array.nbytes / rate)
        self._slots.acquire()
        with self._state:
            self._in_flight += 1
        self._jobs.put((tensor, tag))

    def get_result(self) -> tuple[np.ndarray, object, list[LayerTiming]]:
        """Block until the oldest in-flight job finishes; return its result.

        Results come back strictly in load order as (confidences, tag,
        layer timings). Raises NoJobInFlightError when nothing is
        outstanding.
        """
        with self._state:
            if self._in_flight == 0:
                raise NoJobInFlightError("get_result with no job in flight")
        ok, payload, tag, timings = self._results.get()
        with self._state:
            self._in_flight -= 1
        self._slots.release()
        if not ok:
            raise payload
        return payload, tag, timings

    def close(self) -> None:
        """Stop accepting loads and wait for queued jobs to execute.

        Already-loaded jobs stay retrievable through get_result after
        close returns. Idempotent.
        """
        with self._state:
            first = not self._closed
            self._closed = True
        if first:
            self._jobs.put(_SHUTDOWN)
        self._worker.join()

    @property
    def busy_seconds(self) -> float:
        """Total wall time the device spent executing jobs."""
        with self._state:
            return self._busy_ns / 1e9

    @property
    def energy_joules(self) -> float:
        """Energy proxy: tdp_watts times the busy window."""
        return self.descriptor.tdp_watts * self.busy_seconds

    def _drain(self) -> None:
        while True:
            item = self._jobs.get()
            if item is _SHUTDOWN:
                return
            tensor, tag = item
            started = time.perf_counter_ns()
            try:
                confidences, timings = self._execute(tensor)
            except Exception as exc:  # surfaced to the client in get_result
                with self._state:
                    self._busy_ns += time.perf_counter_ns() - started
                self._results.put((False, exc, tag, None))
                continue
            with self._state:
                self._busy_ns += time.perf_counter_ns() - started
            self._results.put((True, confidences, tag, timings))

    def _execute(self, tensor: Tensor) -> tuple[np.ndarray, list[LayerTiming]]:
        kind = self.descriptor.kind
        if kind is DeviceKind.HOST_FP32:
            return forward(self.graph, tensor, PrecisionMode.FP32)
        if kind is DeviceKind.SIM_VPU_FP16:
            staged = Tensor(half16.quantize_array(tensor.array))
            return forward(self.graph, staged, PrecisionMode.FP16_LAYER)
        started = time.perf_counter_ns()
        time.sleep(self.descriptor.service_ms / 1000.0)
        count = self.graph.output_shape.count
        confidences = np.full(count, 1.0 / count, dtype=np.float32)
        return confidences, [LayerTiming("service_delay", time.perf_counter_ns() - started)]


def open_device(descriptor: DeviceDescriptor, graph: NetworkGraph) -> DeviceHandle:
    """Start a device worker for the given graph and return its handle."""
    return DeviceHandle(descriptor, graph)


def load_tensor(handle: DeviceHandle, tensor: Tensor, tag=None) -> None:
    handle.load_tensor(tensor, tag)


def get_result(handle: DeviceHandle):
    return handle.get_result()


def close_device(handle: DeviceHandle) -> None:
    handle.close()

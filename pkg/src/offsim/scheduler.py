"""Static round-robin batch execution over open device handles.

run_batch assigns job i to handle i mod D, unconditionally. One worker
thread drives each handle, keeping up to the device's queue capacity in
flight so the next transfer overlaps the current execution, and
retrieving results in load order. Results are reported sorted by job
index no matter which device finished when, and the batch wall time
spans first load start to last result retrieval.

A failing job aborts the batch: remaining workers stop loading new
work, drain what they already loaded, and the error surfaces as
BatchAbortedError carrying the partial results. run_grouped executes
several independent batches concurrently on disjoint handle sets, with
per-group error isolation.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .device import DeviceHandle
from .engine import LayerTiming
from .errors import OffsimError
from .tensors import Tensor


@dataclass(frozen=True)
class Job:
    """One unit of work: a sample to push through the network."""

    index: int
    sample_id: str
    input: Tensor


@dataclass(frozen=True, eq=False)
class JobResult:
    job_index: int
    sample_id: str
    confidences: np.ndarray
    device_ordinal: int
    enqueue_seconds: float
    complete_seconds: float
    timings: tuple[LayerTiming, ...]


@dataclass(frozen=True)
class BatchResult:
    """Per-job results ordered by job index, plus the batch makespan."""

    results: tuple[JobResult, ...]
    wall_seconds: float


class BatchAbortedError(OffsimError):
    """A job failed; carries the partial results gathered before the abort."""

    def __init__(self, job_index: int, cause: BaseException, partial: BatchResult):
        super().__init__(f"job {job_index} failed: {cause}")
        self.job_index = job_index
        self.cause = cause
        self.partial = partial


class GroupedRunError(OffsimError):
    """At least one group failed. outcomes[i] is a BatchResult or the exception."""

    def __init__(self, outcomes: list):
        failed = [i for i, o in enumerate(outcomes) if isinstance(o, BaseException)]
        super().__init__(f"groups {failed} failed")
        self.outcomes = outcomes


def _drive_device(ordinal: int, handle: DeviceHandle, jobs: list[Job],
                  slots: list, abort: threading.Event, failures: list,
                  failure_lock: threading.Lock) -> None:
    depth = handle.descriptor.queue_capacity
    pending = deque(jobs)
    in_flight: deque[tuple[Job, float]] = deque()

    def fail(index: int, exc: BaseException) -> None:
        with failure_lock:
            failures.append((index, exc))
        abort.set()

    while pending or in_flight:
        if abort.is_set():
            pending.clear()
        while pending and len(in_flight) < depth:
            job = pending.popleft()
            enqueued = time.perf_counter()
            try:
                handle.load_tensor(job.input, tag=job.index)
            except Exception as exc:
                # Keep draining what was already loaded before giving up.
                fail(job.index, exc)
                pending.clear()
                break
            in_flight.append((job, enqueued))
        if not in_flight:
            return
        try:
            confidences, tag, timings = handle.get_result()
        except Exception as exc:
            fail(in_flight[0][0].index, exc)
            in_flight.popleft()
            continue
        completed = time.perf_counter()
        job, enqueued = in_flight.popleft()
        slots[job.index] = JobResult(
            job_index=job.index, sample_id=job.sample_id, confidences=confidences,
            device_ordinal=ordinal, enqueue_seconds=enqueued, complete_seconds=completed,
            timings=tuple(timings) if timings else ())


def run_batch(handles: list[DeviceHandle], jobs: list[Job]) -> BatchResult:
    """Execute jobs over the handles with static round-robin assignment.

    Job indices must be dense 0..N-1 in submission order. Every handle
    must already be open; the caller keeps ownership and closes them.
    """
    if not handles:
        raise ValueError("run_batch needs at least one device handle")
    if [job.index for job in jobs] != list(range(len(jobs))):
        raise ValueError("job indices must be dense 0..N-1 in order")
    if not jobs:
        return BatchResult(results=(), wall_seconds=0.0)

    count = len(handles)
    slots: list[JobResult | None] = [None] * len(jobs)
    abort = threading.Event()
    failures: list[tuple[int, BaseException]] = []
    failure_lock = threading.Lock()
    workers = [
        threading.Thread(
            target=_drive_device,
            args=(d, handle, jobs[d::count], slots, abort, failures, failure_lock),
            name=f"batch-worker-{d}")
        for d, handle in enumerate(handles)
    ]
    for worker in workers:
        worker.start()
    for worker in workers:
        worker.join()

    finished = [r for r in slots if r is not None]
    if finished:
        wall = (max(r.complete_seconds for r in finished)
                - min(r.enqueue_seconds for r in finished))
    else:
        wall = 0.0
    if failures:
        failures.sort(key=lambda f: f[0])
        index, cause = failures[0]
        partial = BatchResult(results=tuple(sorted(finished, key=lambda r: r.job_index)),
                              wall_seconds=wall)
        raise BatchAbortedError(index, cause, partial)
    return BatchResult(results=tuple(slots), wall_seconds=wall)


def run_grouped(groups: list[tuple[list[DeviceHandle], list[Job]]]) -> list[BatchResult]:
    """Run several batches concurrently on disjoint handle sets.

    Each group is (handles, jobs). Groups fail independently; if any
    failed, GroupedRunError carries every group's outcome.
    """
    seen: set[int] = set()
    for handles, _ in groups:
        for handle in handles:
            if id(handle) in seen:
                raise ValueError("groups must not share device handles")
            seen.add(id(handle))

    outcomes: list = [None] * len(groups)

    def run_one(i: int) -> None:
        handles, jobs = groups[i]
        try:
            outcomes[i] = run_batch(handles, jobs)
        except Exception as exc:
            outcomes[i] = exc

    threads = [threading.Thread(target=run_one, args=(i,), name=f"group-{i}")
               for i in range(len(groups))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if any(isinstance(o, BaseException) for o in outcomes):
        raise GroupedRunError(outcomes)
    return outcomes

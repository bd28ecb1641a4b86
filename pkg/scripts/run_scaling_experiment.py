"""Sweep synthetic device counts and report throughput scaling.

Delay-only devices make the sweep measure the dispatch pipeline rather
than host compute: every job costs one fixed service interval, so ideal
scaling is exactly linear in the device count and any shortfall is
scheduler overhead. Prints the normalized factors, writes one CSV row
per sweep step, and projects the fitted line out to a larger fleet.
"""

import argparse
import csv
import json
import sys

import numpy as np

from offsim.device import DeviceDescriptor, DeviceKind, open_device
from offsim.metrics import normalize_scaling, project_linear, throughput
from offsim.netgraph import parse_manifest
from offsim.scheduler import Job, run_batch
from offsim.tensors import Tensor

# A network the synthetic devices never execute; it only has to load.
_MANIFEST = {"input": {"c": 4, "h": 1, "w": 1},
             "layers": [{"id": "out", "kind": "softmax", "inputs": []}]}


def parse_counts(text):
    try:
        counts = [int(p) for p in text.split(",") if p]
    except ValueError:
        raise SystemExit(f"bad --counts value: {text!r}")
    if not counts or any(c < 1 for c in counts):
        raise SystemExit("--counts needs positive integers")
    return counts


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--counts", default="1,2,4,8",
                        help="comma-separated device counts to sweep")
    parser.add_argument("--jobs-per-device", type=int, default=100)
    parser.add_argument("--service-ms", type=float, default=10.0,
                        help="per-job service time of each synthetic device")
    parser.add_argument("--project-at", type=int, default=16,
                        help="fleet size to extrapolate the fitted line to")
    parser.add_argument("--out", default="scaling.csv")
    args = parser.parse_args(argv)

    graph = parse_manifest(json.dumps(_MANIFEST).encode("utf-8"), b"")
    tensor = Tensor(np.zeros((1, 4, 1, 1), dtype=np.float32))

    measured = []
    rows = []
    for count in parse_counts(args.counts):
        descriptor = DeviceDescriptor(kind=DeviceKind.SYNTHETIC_DELAY,
                                      service_ms=args.service_ms)
        handles = [open_device(descriptor, graph) for _ in range(count)]
        n_jobs = args.jobs_per_device * count
        try:
            jobs = [Job(i, f"s{i:05d}", tensor) for i in range(n_jobs)]
            result = run_batch(handles, jobs)
        finally:
            for handle in handles:
                handle.close()
        rate = throughput(n_jobs, result.wall_seconds)
        measured.append((count, rate))
        rows.append({"device_count": count, "n_jobs": n_jobs,
                     "wall_seconds": f"{result.wall_seconds:.6f}",
                     "img_per_sec": f"{rate:.6f}"})
        print(f"{count:3d} devices: {n_jobs:5d} jobs in "
              f"{result.wall_seconds:7.3f} s -> {rate:8.2f} img/s")

    factors = normalize_scaling(measured, measured[0][1])
    for (count, _), (_, factor) in zip(measured, factors):
        print(f"  scaling at {count:3d}: {factor:.4f} (ideal {count})")
    projected = project_linear(measured, args.project_at)
    print(f"fitted line projects {projected:.2f} img/s at "
          f"{args.project_at} devices")

    for row, (_, factor) in zip(rows, factors):
        row["scaling_factor"] = f"{factor:.6f}"
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]),
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

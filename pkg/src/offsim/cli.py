"""Command line entry points: bench, accuracy, gen-fixture.

bench sweeps batch sizes over a device fleet, timing round-robin batch
runs subset by subset and writing one CSV row per (batch size, subset,
repetition) plus mean/stddev aggregate rows. The number of devices
opened for a sweep step equals the batch size, capped at the configured
fleet size. accuracy runs every sample through one binary32 host device
and one binary16 simulated accelerator and reports per-subset top-1
error and confidence differences. gen-fixture writes a self-contained
synthetic network and dataset.

Configuration comes from a JSON file (--config) with flag overrides.
Relative paths inside the file resolve against its directory. Exit
codes: 0 success, 1 unusable configuration or input files, 2 runtime
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from .device import (DEFAULT_QUEUE_CAPACITY, DeviceDescriptor, DeviceKind,
                     open_device)
from .errors import (ConfigError, DatasetEmptyError, LabelFileError,
                     ManifestError, MissingLabelError, NoSurvivingSamplesError,
                     OffsimError, TensorFileError)
from .fixtures import FixtureSpec, generate_fixture
from .metrics import (confidence_diff, stddev, throughput,
                      throughput_per_watt, top1_error)
from .netgraph import load_manifest
from .scheduler import Job, run_batch
from .tensors import read_labels, read_tensor_file

CSV_COLUMNS = [
    "run_id", "batch_size", "device_kind", "device_count", "subset",
    "repetition", "n_images", "wall_seconds", "img_per_sec",
    "tdp_watts_total", "img_per_watt", "top1_error", "conf_diff",
    "scaling_factor",
]


@dataclass(frozen=True)
class DeviceConfig:
    """One fleet entry: a device template and how many copies of it."""

    kind: DeviceKind
    count: int = 1
    tdp_watts: float | None = None
    transfer_bytes_per_sec: float | None = None
    service_ms: float | None = None
    queue_capacity: int = DEFAULT_QUEUE_CAPACITY

    def descriptor(self) -> DeviceDescriptor:
        try:
            return DeviceDescriptor(
                kind=self.kind, tdp_watts=self.tdp_watts,
                transfer_bytes_per_sec=self.transfer_bytes_per_sec,
                service_ms=self.service_ms, queue_capacity=self.queue_capacity)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class RunConfig:
    manifest: Path | None = None
    weights: Path | None = None
    dataset: Path | None = None
    labels: Path | None = None
    devices: list[DeviceConfig] = field(default_factory=list)
    batch_sizes: list[int] = field(default_factory=lambda: [1])
    subset_size: int | None = None
    repetitions: int = 1
    out: Path = Path("results.csv")
    seed: int = 0


_CONFIG_KEYS = {"manifest", "weights", "dataset", "labels", "devices",
                "batch_sizes", "subset_size", "repetitions", "out", "seed"}

_DEVICE_KEYS = {"kind", "count", "tdp_watts", "transfer_bytes_per_sec",
                "service_ms", "queue_capacity"}


def _parse_kind(name: str) -> DeviceKind:
    try:
        return DeviceKind(name)
    except ValueError:
        known = ", ".join(k.value for k in DeviceKind)
        raise ConfigError(f"unknown device kind {name!r} (known: {known})") from None


def _parse_device_entry(obj) -> DeviceConfig:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"device entries must be objects with a 'kind', got {obj!r}")
    unknown = set(obj) - _DEVICE_KEYS
    if unknown:
        raise ConfigError(f"unknown device fields: {sorted(unknown)}")
    kind = _parse_kind(obj["kind"])
    count = obj.get("count", 1)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise ConfigError(f"device count must be a positive integer, got {count!r}")
    return DeviceConfig(
        kind=kind, count=count,
        tdp_watts=obj.get("tdp_watts"),
        transfer_bytes_per_sec=obj.get("transfer_bytes_per_sec"),
        service_ms=obj.get("service_ms"),
        queue_capacity=obj.get("queue_capacity", DEFAULT_QUEUE_CAPACITY))


def load_config(path) -> RunConfig:
    """Read a JSON run configuration. Relative paths follow the file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = path.parent
    cfg = RunConfig()

    def _path(key):
        value = doc.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ConfigError(f"config key {key!r} must be a path string")
        return base / value

    cfg.manifest = _path("manifest")
    cfg.weights = _path("weights")
    cfg.dataset = _path("dataset")
    cfg.labels = _path("labels")
    if "out" in doc:
        out = doc["out"]
        if not isinstance(out, str):
            raise ConfigError("config key 'out' must be a path string")
        cfg.out = base / out
    if "devices" in doc:
        if not isinstance(doc["devices"], list):
            raise ConfigError("config key 'devices' must be a list")
        cfg.devices = [_parse_device_entry(d) for d in doc["devices"]]
    if "batch_sizes" in doc:
        sizes = doc["batch_sizes"]
        if (not isinstance(sizes, list) or not sizes
                or not all(isinstance(b, int) and not isinstance(b, bool) and b >= 1
                           for b in sizes)):
            raise ConfigError("config key 'batch_sizes' must be a non-empty list of "
                              "positive integers")
        cfg.batch_sizes = list(sizes)
    for key in ("subset_size", "repetitions", "seed"):
        if key in doc:
            value = doc[key]
            minimum = 0 if key == "seed" else 1
            if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
                raise ConfigError(f"config key {key!r} must be an integer >= {minimum}")
            setattr(cfg, "repetitions" if key == "repetitions" else key, value)
    return cfg


def parse_device_flag(text: str) -> DeviceConfig:
    """Parse a --devices value of the form KIND:COUNT[:TDP]."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ConfigError(f"--devices expects KIND:COUNT[:TDP], got {text!r}")
    kind = _parse_kind(parts[0])
    try:
        count = int(parts[1])
    except ValueError:
        raise ConfigError(f"device count in {text!r} is not an integer") from None
    if count < 1:
        raise ConfigError(f"device count must be positive, got {count}")
    tdp = None
    if len(parts) == 3:
        try:
            tdp = float(parts[2])
        except ValueError:
            raise ConfigError(f"TDP in {text!r} is not a number") from None
    return DeviceConfig(kind=kind, count=count, tdp_watts=tdp)


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.devices:
        cfg.devices = [parse_device_flag(text) for text in args.devices]
    if args.batch_sizes is not None:
        try:
            sizes = [int(piece) for piece in args.batch_sizes.split(",") if piece]
        except ValueError:
            raise ConfigError(f"--batch-sizes expects comma-separated integers, "
                              f"got {args.batch_sizes!r}") from None
        if not sizes or any(b < 1 for b in sizes):
            raise ConfigError("--batch-sizes values must be positive")
        cfg.batch_sizes = sizes
    if args.subset_size is not None:
        if args.subset_size < 1:
            raise ConfigError("--subset-size must be positive")
        cfg.subset_size = args.subset_size
    if args.reps is not None:
        if args.reps < 1:
            raise ConfigError("--reps must be positive")
        cfg.repetitions = args.reps
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.service_ms is not None:
        cfg.devices = [replace(d, service_ms=args.service_ms)
                       if d.kind is DeviceKind.SYNTHETIC_DELAY else d
                       for d in cfg.devices]
    return cfg


def _build_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = _apply_overrides(cfg, args)
    if cfg.manifest is None or cfg.weights is None or cfg.dataset is None:
        raise ConfigError("manifest, weights and dataset paths are required "
                          "(set them in the config file)")
    if not cfg.devices:
        raise ConfigError("at least one device must be configured")
    return cfg


def _load_dataset(cfg: RunConfig) -> list[tuple[str, object]]:
    files = sorted(Path(cfg.dataset).glob("*.ntsr"))
    if not files:
        raise DatasetEmptyError(f"no .ntsr files in {cfg.dataset}")
    return [(f.stem, read_tensor_file(f)) for f in files]


def _partition(samples: list, size: int | None) -> list[list]:
    if size is None:
        return [samples]
    return [samples[i:i + size] for i in range(0, len(samples), size)]


def _expand_descriptors(cfg: RunConfig) -> tuple[list[DeviceDescriptor], list[str]]:
    descriptors: list[DeviceDescriptor] = []
    kinds: list[str] = []
    for entry in cfg.devices:
        for _ in range(entry.count):
            descriptors.append(entry.descriptor())
            kinds.append(entry.kind.value)
    return descriptors, kinds


def _kind_label(kinds: list[str]) -> str:
    unique = sorted(set(kinds))
    return unique[0] if len(unique) == 1 else "mixed"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _fmt(row.get(key)) for key in CSV_COLUMNS})


def cmd_bench(cfg: RunConfig) -> None:
    """Throughput sweep; writes the CSV described in the module docstring."""
    graph = load_manifest(cfg.manifest, cfg.weights)
    samples = _load_dataset(cfg)
    subsets = _partition(samples, cfg.subset_size)
    descriptors, kinds = _expand_descriptors(cfg)
    run_id = f"bench-{cfg.seed:08d}"

    rows: list[dict] = []
    mean_rate: dict[int, float] = {}
    aggregate_rows: dict[int, tuple[dict, dict]] = {}
    for batch in cfg.batch_sizes:
        opened = min(batch, len(descriptors))
        handles = [open_device(d, graph) for d in descriptors[:opened]]
        try:
            tdp_total = sum(h.descriptor.tdp_watts for h in handles)
            label = _kind_label(kinds[:opened])
            rates = []
            walls = []
            for subset_index, subset in enumerate(subsets):
                for rep in range(cfg.repetitions):
                    jobs = [Job(i, sid, tensor) for i, (sid, tensor) in enumerate(subset)]
                    result = run_batch(handles, jobs)
                    rate = throughput(len(jobs), result.wall_seconds)
                    rates.append(rate)
                    walls.append(result.wall_seconds)
                    rows.append({
                        "run_id": run_id, "batch_size": batch, "device_kind": label,
                        "device_count": opened, "subset": subset_index,
                        "repetition": rep, "n_images": len(jobs),
                        "wall_seconds": result.wall_seconds, "img_per_sec": rate,
                        "tdp_watts_total": tdp_total,
                        "img_per_watt": throughput_per_watt(rate, tdp_total),
                    })
        finally:
            for handle in handles:
                handle.close()
        mean = sum(rates) / len(rates)
        spread = stddev(rates)
        mean_rate[batch] = mean
        mean_row = {
            "run_id": run_id, "batch_size": batch, "device_kind": label,
            "device_count": opened, "subset": "all", "repetition": "mean",
            "wall_seconds": sum(walls) / len(walls),
            "img_per_sec": mean, "tdp_watts_total": tdp_total,
            "img_per_watt": throughput_per_watt(mean, tdp_total),
        }
        std_row = {
            "run_id": run_id, "batch_size": batch, "device_kind": label,
            "device_count": opened, "subset": "all", "repetition": "stddev",
            "img_per_sec": spread, "tdp_watts_total": tdp_total,
            "img_per_watt": throughput_per_watt(spread, tdp_total),
        }
        rows.append(mean_row)
        rows.append(std_row)
        aggregate_rows[batch] = (mean_row, std_row)

    baseline_batch = 1 if 1 in cfg.batch_sizes else min(cfg.batch_sizes)
    baseline = mean_rate[baseline_batch]
    for batch, (mean_row, std_row) in aggregate_rows.items():
        mean_row["scaling_factor"] = mean_rate[batch] / baseline
        std_row["scaling_factor"] = std_row["img_per_sec"] / baseline
    _write_csv(cfg.out, rows)
    print(f"wrote {cfg.out} ({len(rows)} rows)")


def _accuracy_descriptor(cfg: RunConfig, kind: DeviceKind) -> DeviceDescriptor:
    for entry in cfg.devices:
        if entry.kind is kind:
            return entry.descriptor()
    return DeviceDescriptor(kind=kind)


def cmd_accuracy(cfg: RunConfig) -> None:
    """Compare binary32 host inference against the binary16 accelerator."""
    if cfg.labels is None:
        raise ConfigError("accuracy requires a labels path")
    graph = load_manifest(cfg.manifest, cfg.weights)
    samples = _load_dataset(cfg)
    label_map = dict(read_labels(cfg.labels))
    missing = [sid for sid, _ in samples if sid not in label_map]
    if missing:
        raise MissingLabelError(f"no label for samples: {missing[:5]}"
                                + ("..." if len(missing) > 5 else ""))
    subsets = _partition(samples, cfg.subset_size)
    run_id = f"accuracy-{cfg.seed:08d}"

    host = open_device(_accuracy_descriptor(cfg, DeviceKind.HOST_FP32), graph)
    vpu = open_device(_accuracy_descriptor(cfg, DeviceKind.SIM_VPU_FP16), graph)
    rows: list[dict] = []
    per_kind: dict[str, list[dict]] = {"host_fp32": [], "sim_vpu_fp16": []}
    try:
        for subset_index, subset in enumerate(subsets):
            jobs = [Job(i, sid, tensor) for i, (sid, tensor) in enumerate(subset)]
            labels = [label_map[sid] for sid, _ in subset]
            host_result = run_batch([host], jobs)
            vpu_result = run_batch([vpu], jobs)
            host_conf = [r.confidences for r in host_result.results]
            vpu_conf = [r.confidences for r in vpu_result.results]
            try:
                diff = confidence_diff(host_conf, vpu_conf, labels)
            except NoSurvivingSamplesError:
                diff = None
            for device, result, conf, extra in (
                    (host, host_result, host_conf, None),
                    (vpu, vpu_result, vpu_conf, diff)):
                kind = device.descriptor.kind.value
                rate = throughput(len(jobs), result.wall_seconds)
                tdp = device.descriptor.tdp_watts
                row = {
                    "run_id": run_id, "batch_size": 1, "device_kind": kind,
                    "device_count": 1, "subset": subset_index, "repetition": 0,
                    "n_images": len(jobs), "wall_seconds": result.wall_seconds,
                    "img_per_sec": rate, "tdp_watts_total": tdp,
                    "img_per_watt": throughput_per_watt(rate, tdp),
                    "top1_error": top1_error(conf, labels),
                    "conf_diff": extra,
                }
                rows.append(row)
                per_kind[kind].append(row)
    finally:
        host.close()
        vpu.close()

    for kind, kind_rows in per_kind.items():
        errors = [r["top1_error"] for r in kind_rows]
        rates = [r["img_per_sec"] for r in kind_rows]
        diffs = [r["conf_diff"] for r in kind_rows if r["conf_diff"] is not None]
        tdp = kind_rows[0]["tdp_watts_total"]
        mean = sum(rates) / len(rates)
        rows.append({
            "run_id": run_id, "batch_size": 1, "device_kind": kind,
            "device_count": 1, "subset": "all", "repetition": "mean",
            "img_per_sec": mean, "tdp_watts_total": tdp,
            "img_per_watt": throughput_per_watt(mean, tdp),
            "top1_error": sum(errors) / len(errors),
            "conf_diff": sum(diffs) / len(diffs) if diffs else None,
        })
        rows.append({
            "run_id": run_id, "batch_size": 1, "device_kind": kind,
            "device_count": 1, "subset": "all", "repetition": "stddev",
            "img_per_sec": stddev(rates), "tdp_watts_total": tdp,
            "top1_error": stddev(errors),
            "conf_diff": stddev(diffs) if diffs else None,
        })
    _write_csv(cfg.out, rows)
    print(f"wrote {cfg.out} ({len(rows)} rows)")


def cmd_gen_fixture(out_dir, seed: int, spec: FixtureSpec) -> None:
    paths = generate_fixture(out_dir, seed, spec)
    print(f"fixture written to {paths.root}")
    for name in ("manifest", "weights", "dataset_dir", "labels", "config"):
        print(f"  {name}: {getattr(paths, name)}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="offsim",
                                     description="Simulated accelerator offload benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--devices", action="append", metavar="KIND:COUNT[:TDP]",
                       help="override the device fleet (repeatable)")
        p.add_argument("--batch-sizes", help="comma-separated sweep, e.g. 1,2,4,8")
        p.add_argument("--subset-size", type=int, help="samples per subset")
        p.add_argument("--reps", type=int, help="repetitions per subset")
        p.add_argument("--seed", type=int, help="run seed (tags the output)")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--service-ms", type=float,
                       help="service time for synthetic_delay devices")

    add_run_flags(sub.add_parser("bench", help="throughput sweep over batch sizes"))
    add_run_flags(sub.add_parser("accuracy",
                                 help="binary32 vs binary16 accuracy comparison"))
    gen = sub.add_parser("gen-fixture", help="write a synthetic network and dataset")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--samples", type=int, default=500)
    gen.add_argument("--preset", choices=("random", "fp16-exact"), default="random")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 1

    if args.command == "gen-fixture":
        try:
            spec = FixtureSpec(samples=args.samples,
                               preset=args.preset.replace("-", "_"))
            cmd_gen_fixture(args.out, args.seed, spec)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except OffsimError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0

    try:
        cfg = _build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "bench":
            cmd_bench(cfg)
        else:
            cmd_accuracy(cfg)
    except (ConfigError, DatasetEmptyError, MissingLabelError, ManifestError,
            TensorFileError, LabelFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OffsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

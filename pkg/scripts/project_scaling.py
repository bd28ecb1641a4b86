"""Fit a line to (device count, images/sec) measurements and project it.

Accepts either literal --points or a bench CSV (the mean aggregate rows
supply one point per batch size). Prints the normalized scaling factors
and the projected throughput at the target fleet size.
"""

import argparse
import csv
import sys

from offsim.metrics import normalize_scaling, project_linear


def parse_points(texts):
    points = []
    for text in texts:
        try:
            count, rate = text.split(":")
            points.append((int(count), float(rate)))
        except ValueError:
            raise SystemExit(f"bad --points entry {text!r}, want COUNT:RATE")
    return points


def points_from_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    points = [(int(r["batch_size"]), float(r["img_per_sec"]))
              for r in rows if r.get("repetition") == "mean"]
    if not points:
        raise SystemExit(f"{path} has no mean aggregate rows")
    return points


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--points", nargs="+", metavar="COUNT:RATE",
                        help="literal measurements, e.g. 1:9.93 2:19.68")
    source.add_argument("--csv", help="bench output to read mean rows from")
    parser.add_argument("--at", type=int, default=16,
                        help="fleet size to project to")
    args = parser.parse_args(argv)

    points = parse_points(args.points) if args.points \
        else points_from_csv(args.csv)
    points.sort()
    baseline = points[0][1]
    for (count, rate), (_, factor) in zip(points,
                                          normalize_scaling(points, baseline)):
        print(f"{count:4d} devices: {rate:10.4f} img/s  "
              f"(factor {factor:.4f}, ideal {count / points[0][0]:g})")
    print(f"projected at {args.at}: {project_linear(points, args.at):.4f} img/s")
    return 0


if __name__ == "__main__":
    sys.exit(main())

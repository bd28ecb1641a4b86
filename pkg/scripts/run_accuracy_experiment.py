"""Generate a synthetic fixture and compare host binary32 inference
against the emulated binary16 accelerator on it.

Thin driver over the gen-fixture and accuracy commands: writes the
fixture into a work directory, runs the comparison, and prints the
aggregate rows of the resulting CSV.
"""

import argparse
import csv
import sys
import tempfile
from pathlib import Path

from offsim.cli import main as offsim


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=500)
    parser.add_argument("--preset", choices=("random", "fp16-exact"),
                        default="random")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--subset-size", type=int, default=100)
    parser.add_argument("--workdir", help="where to put the fixture "
                        "(default: a fresh temporary directory)")
    parser.add_argument("--out", default="accuracy.csv")
    args = parser.parse_args(argv)

    workdir = Path(args.workdir) if args.workdir else \
        Path(tempfile.mkdtemp(prefix="offsim-accuracy-"))
    code = offsim(["gen-fixture", "--out", str(workdir),
                   "--seed", str(args.seed), "--samples", str(args.samples),
                   "--preset", args.preset])
    if code:
        return code
    code = offsim(["accuracy", "--config", str(workdir / "config.json"),
                   "--out", args.out, "--subset-size", str(args.subset_size),
                   "--seed", str(args.seed)])
    if code:
        return code

    with open(args.out, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.DictReader(fh) if r["subset"] == "all"]
    print(f"\n{args.preset} preset, {args.samples} samples:")
    for row in rows:
        diff = row["conf_diff"] or "-"
        print(f"  {row['device_kind']:>14} {row['repetition']:>6}: "
              f"top-1 error {row['top1_error']:>12}  conf diff {diff:>12}  "
              f"{row['img_per_sec']:>10} img/s")
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run the full benchmark matrix and the rate traces into results/.

Equivalent to the documented CLI invocations; kept as a script so the whole
experiment set reruns with one command.
"""

import pathlib
import sys

from fslp.cli import main

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"


def run() -> int:
    jobs = sys.argv[1] if len(sys.argv) > 1 else "2"
    steps = [
        ["bench", "--suite", "pointmass2d", "--count", "100", "--seed", "42",
         "--accels", "none,aa1,aa5,aa15", "--jobs", jobs,
         "--out", str(OUT / "pointmass2d")],
        ["bench", "--suite", "doubleint1d", "--count", "100", "--seed", "42",
         "--accels", "none,aa1,aa5,aa15", "--jobs", jobs,
         "--out", str(OUT / "doubleint1d")],
        ["trace-rates", "--problem", "circle", "--accels", "none,aa1,aa5,aa15",
         "--out", str(OUT / "rates-circle")],
        ["trace-rates", "--problem", "doubleint1d", "--accels", "none,aa1,aa5",
         "--out", str(OUT / "rates-doubleint1d")],
        ["trace-rates", "--problem", "pointmass2d", "--accels", "none,aa1,aa5",
         "--out", str(OUT / "rates-pointmass2d")],
    ]
    for args in steps:
        print("fslp", " ".join(args))
        code = main(args)
        if code != 0:
            print(f"step exited with {code}", file=sys.stderr)
            return code
    print(f"results under {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(run())

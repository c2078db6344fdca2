#!/usr/bin/env python3
"""Run every bundled scenario through its verification subcommand.

Writes one artifact directory per scenario under --results (default
results/) and prints a single PASS/FAIL line per run.  Exit status is
nonzero if any scenario fails, so the script doubles as a coarse
regression gate for the whole pipeline.
"""

from __future__ import annotations

import argparse
import pathlib
import sys
import time

from evoreg.cli import run_scenario
from evoreg.config import load_config
from evoreg.report import emit_report

# scenario file -> subcommand it exercises
SUITE = [
    ("det_single_beta1.toml", "verify-det"),
    ("det_single_beta07.toml", "verify-det"),
    ("det_multimode.toml", "verify-det"),
    ("stoch_pure_noise.toml", "verify-stoch"),
    ("stoch_combined.toml", "verify-stoch"),
    ("isometry_cable3.toml", "isometry"),
    ("isometry_cable64.toml", "isometry"),
    ("holder_white_comparison.toml", "holder"),
    ("holder_smoothed.toml", "holder"),
    ("simulate_example.toml", "simulate"),
]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=pathlib.Path, default=pathlib.Path("configs"))
    ap.add_argument("--results", type=pathlib.Path, default=pathlib.Path("results"))
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)

    failures = 0
    for name, sub in SUITE:
        cfg = load_config(args.configs / name)
        t0 = time.perf_counter()
        result = run_scenario(cfg, sub, threads=args.threads)
        elapsed = time.perf_counter() - t0
        out_dir = args.results / pathlib.Path(name).stem
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_bytes(emit_report(result.report, "json"))
        for fname, blob in result.artifacts.items():
            (out_dir / fname).write_bytes(blob)
        status = "PASS" if result.report.passed else "FAIL"
        failures += status == "FAIL"
        print(f"{status}  {sub:12s} {name:32s} {elapsed:7.2f}s")

    print(f"{len(SUITE) - failures}/{len(SUITE)} scenarios passed")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

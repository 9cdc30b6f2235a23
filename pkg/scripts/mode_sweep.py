#!/usr/bin/env python3
"""Fourier-mode sweep: does doubling the retained modes fix the flat probes?

Trains the grid operator at 12 and 24 modes on the same projected dataset
and prints probe capture ratios side by side; both stay well below the
reference oscillation amplitude.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from flowop.experiment import (  # noqa: E402
    evaluate_case,
    generate_cases,
    predict_grid_series,
    project_cases,
    train_fno_stage,
)
from flowop.runconfig import RunConfig  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None)
    ap.add_argument("--modes", default="12,24", help="mode counts to sweep")
    args = ap.parse_args()
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig.default()

    t0 = time.time()
    _, splits, series = generate_cases(cfg)
    structured, _ = project_cases(cfg, {"velocity": series["velocity"]})
    split, cases = splits["velocity"], structured["velocity"]
    print(f"dataset projected [{time.time() - t0:.0f}s]")

    results = {}
    for m in (int(x) for x in args.modes.split(",")):
        model, history = train_fno_stage(cfg, split, cases, "velocity", modes=(m, m))
        print(f"modes ({m}, {m}): best val loss {min(history.val_loss):.3e} "
              f"[{time.time() - t0:.0f}s]")
        for meta in split.test:
            ref = cases[meta.inlet_velocity]
            ev = evaluate_case(predict_grid_series(model, ref), ref,
                               band=cfg["dtw.band"])
            print(f"  U={meta.inlet_velocity}: capture {ev.capture_mean:.3f} "
                  f"relative L2 {ev.relative_l2_mean:.4f}")
            results[(m, meta.inlet_velocity)] = ev.capture_mean

    modes = sorted({m for m, _ in results})
    if len(modes) == 2:
        a, b = modes
        for u in sorted({u for _, u in results}):
            print(f"U={u}: capture {a} modes {results[(a, u)]:.3f} vs "
                  f"{b} modes {results[(b, u)]:.3f} "
                  f"(gap {abs(results[(a, u)] - results[(b, u)]):.3f})")


if __name__ == "__main__":
    main()

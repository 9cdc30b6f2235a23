#!/usr/bin/env python3
"""Single- vs multi-scale trunk A/B on the velocity dataset.

Trains both latent operators under equal epoch budgets on top of one shared
autoencoder and prints per-probe oscillation-capture ratios on the test
cases; the single-scale trunk flattens to the mean flow while the
multi-scale trunk recovers the shedding tone.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from flowop.experiment import (  # noqa: E402
    evaluate_case,
    generate_cases,
    predict_ldon_series,
    train_ldon_stage,
    train_mlp_ae_stage,
)
from flowop.runconfig import RunConfig  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=None, help="defaults to the desk config")
    ap.add_argument("--out", default=None, help="optional CSV output path")
    args = ap.parse_args()
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig.default()

    t0 = time.time()
    _, splits, series = generate_cases(cfg)
    split, cases = splits["velocity"], series["velocity"]
    print(f"dataset: {len(split.all_cases)} cases [{time.time() - t0:.0f}s]")

    ae, _ = train_mlp_ae_stage(cfg, split, cases, "velocity")
    print(f"autoencoder trained [{time.time() - t0:.0f}s]")

    rows = []
    for multiscale in (False, True):
        label = "multi-scale" if multiscale else "single-scale"
        model, history = train_ldon_stage(cfg, ae, split, cases, "velocity",
                                          multiscale=multiscale)
        print(f"{label}: best val loss {min(history.val_loss):.3e} "
              f"[{time.time() - t0:.0f}s]")
        for meta in split.test:
            ref = cases[meta.inlet_velocity]
            ev = evaluate_case(predict_ldon_series(model, ae, ref), ref,
                               band=cfg["dtw.band"])
            probes = " ".join(
                f"{k}={v:.2f}" for k, v in sorted(ev.capture_per_probe.items())
            )
            print(f"  U={meta.inlet_velocity}: capture {ev.capture_mean:.3f} "
                  f"({probes}) relative L2 {ev.relative_l2_mean:.4f}")
            rows.append((label, meta.inlet_velocity, ev.capture_mean,
                         ev.relative_l2_mean))

    if args.out:
        lines = ["model,inlet_velocity,capture_mean,relative_l2_mean"]
        lines += [f"{m},{u},{c!r},{r!r}" for m, u, c, r in rows]
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    vanilla = np.mean([c for m, u, c, _ in rows if m == "single-scale" and u == 0.4])
    ms = np.mean([c for m, u, c, _ in rows if m == "multi-scale" and u == 0.4])
    print(f"capture at 0.4 m/s: single-scale {vanilla:.3f} vs multi-scale {ms:.3f}")


if __name__ == "__main__":
    main()

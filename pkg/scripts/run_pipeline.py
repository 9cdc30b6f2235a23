#!/usr/bin/env python3
"""End-to-end desk experiment: data, interpolation, all models, evaluation.

Produces a run directory with the dataset, checkpoints, per-case metric CSVs,
and consolidated comparison tables.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from flowop.cli import main as cli  # noqa: E402


def run(cmd: list[str]):
    print(f"$ flowop {' '.join(cmd)}", flush=True)
    t = time.time()
    code = cli(cmd)
    if code != 0:
        sys.exit(code)
    print(f"  [{time.time() - t:.0f}s]", flush=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--fields", default="velocity,pressure")
    args = ap.parse_args()
    out = Path(args.out)
    raw, grid = out / "data", out / "structured"
    run(["gen-data", "--config", args.config, "--out", str(raw)])
    run(["interp", "--config", args.config, "--data", str(raw), "--out", str(grid)])

    for field in args.fields.split(","):
        mdir = out / "models" / field
        run(["train", "--config", args.config, "--data", str(raw),
             "--model", "mlp-ae", "--field", field, "--out", str(mdir / "mlp-ae")])
        run(["train", "--config", args.config, "--data", str(grid),
             "--model", "cae", "--field", field, "--out", str(mdir / "cae")])
        mlp_ae = str(mdir / "mlp-ae" / "checkpoint.nosg")
        cae = str(mdir / "cae" / "checkpoint.nosg")
        run(["train", "--config", args.config, "--data", str(raw),
             "--model", "ms-ldon", "--field", field, "--ae", mlp_ae,
             "--out", str(mdir / "ms-ldon-mlp")])
        run(["train", "--config", args.config, "--data", str(grid),
             "--model", "ms-ldon", "--field", field, "--ae", cae,
             "--out", str(mdir / "ms-ldon-cae")])
        run(["train", "--config", args.config, "--data", str(grid),
             "--model", "fno", "--field", field, "--out", str(mdir / "fno")])
        run(["train", "--config", args.config, "--data", str(grid),
             "--model", "mscale-fno", "--field", field,
             "--out", str(mdir / "mscale-fno")])

        models = {
            "ms-ldon-mlp": (mdir / "ms-ldon-mlp", raw, mlp_ae),
            "ms-ldon-cae": (mdir / "ms-ldon-cae", grid, cae),
            "fno": (mdir / "fno", grid, None),
            "mscale-fno": (mdir / "mscale-fno", grid, None),
        }
        for case in ("0.4", "0.7"):
            for label, (ckpt_dir, data_dir, ae_path) in models.items():
                pred_dir = out / "predictions" / field / label
                cmd = ["predict", "--checkpoint", str(ckpt_dir / "checkpoint.nosg"),
                       "--data", str(data_dir), "--case", case, "--field", field,
                       "--out", str(pred_dir)]
                if ae_path:
                    cmd += ["--ae", ae_path]
                run(cmd)
                ckpt_kind = "ms-ldon" if label.startswith("ms-ldon") else label
                pred = pred_dir / f"pred_{ckpt_kind}_{field}_u{case}.nosg"
                ref = data_dir / f"{field}_u{case}.nosg"
                run(["evaluate", "--config", args.config, "--pred", str(pred),
                     "--ref", str(ref), "--model", label,
                     "--out", str(out / "metrics" / field / f"{label}_u{case}")])

    run(["report", "--run", str(out / "metrics"), "--out", str(out / "report")])
    print(f"done; see {out / 'report'}")


if __name__ == "__main__":
    main()

"""Batch command-line entry point.

Subcommands: gen-data, interp, train, predict, evaluate, report.  Every
command validates its inputs before writing any output file, echoes the
resolved configuration into its output directory, and exits with 0 on
success, 2 on configuration errors, 3 on data errors, 4 on training
divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContainerError, DataError, FlowopError, TrainingDiverged
from .experiment import (
    case_name,
    evaluate_case,
    evaluation_rows,
    generate_cases,
    predict_grid_series,
    predict_ldon_series,
    project_cases,
    train_cae_stage,
    train_fno_stage,
    train_ldon_stage,
    train_mlp_ae_stage,
    train_mscale_fno_stage,
)
from .fields import StructuredSeries
from .metrics import MetricReport, default_probes, probe_history
from .nosg import load_series, save_series, write_signal_csv
from .operators import load_operator, save_operator
from .rom import load_ae, save_ae
from .runconfig import RunConfig

MODEL_CHOICES = ("mlp-ae", "cae", "ldon", "ms-ldon", "fno", "mscale-fno")


def _load_config(path: str) -> RunConfig:
    if not Path(path).is_file():
        raise ConfigError(f"config file {path} does not exist")
    return RunConfig.from_file(path)


def _load_manifest(data_dir: Path) -> dict:
    manifest = data_dir / "manifest.json"
    if not manifest.is_file():
        raise DataError(f"no manifest.json under {data_dir}")
    return json.loads(manifest.read_text())


def _case_file(data_dir: Path, kind: str, velocity: float) -> Path:
    manifest = _load_manifest(data_dir)
    for entry in manifest["cases"]:
        if entry["field_kind"] == kind and entry["inlet_velocity"] == velocity:
            return data_dir / entry["file"]
    raise DataError(f"case {kind} u={velocity} not in {data_dir}")


def cmd_gen_data(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out)
    nodes, splits, series = generate_cases(cfg)
    cfg.echo(out)
    entries = []
    roles = {}
    for kind, split in splits.items():
        for role, metas in (("train", split.train), ("val", split.val),
                            ("test", split.test)):
            for m in metas:
                roles[(kind, m.inlet_velocity)] = role
    for kind, cases in series.items():
        for velocity, s in cases.items():
            fname = case_name(s.meta) + ".nosg"
            save_series(out / fname, s)
            entries.append(
                {
                    "field_kind": kind,
                    "inlet_velocity": velocity,
                    "role": roles[(kind, velocity)],
                    "file": fname,
                }
            )
    manifest = {
        "seed": cfg.seed,
        "n_nodes": int(nodes.shape[0]),
        "n_timesteps": cfg["n_timesteps"],
        "snapshot_interval": cfg["snapshot_interval"],
        "layout": "unstructured",
        "cases": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    print(f"wrote {len(entries)} cases to {out}")
    return 0


def cmd_interp(args) -> int:
    cfg = _load_config(args.config)
    merged = dict(cfg.values)
    for flag, key in (
        (args.scale, "interp.scale"),
        (args.k, "interp.k"),
        (args.p, "interp.p"),
        (args.mask_factor, "interp.mask_factor"),
    ):
        if flag is not None:
            merged[key] = flag
    cfg = RunConfig(merged)
    data_dir = Path(args.data)
    manifest = _load_manifest(data_dir)
    out = Path(args.out)
    series = {}
    for entry in manifest["cases"]:
        kind = entry["field_kind"]
        series.setdefault(kind, {})[entry["inlet_velocity"]] = load_series(
            data_dir / entry["file"]
        )
    cfg.echo(out)
    structured, fidelity = project_cases(cfg, series)
    entries = []
    for kind, cases in structured.items():
        for velocity, s in cases.items():
            fname = case_name(s.meta) + ".nosg"
            save_series(out / fname, s)
            role = next(
                e["role"]
                for e in manifest["cases"]
                if e["field_kind"] == kind and e["inlet_velocity"] == velocity
            )
            entries.append(
                {
                    "field_kind": kind,
                    "inlet_velocity": velocity,
                    "role": role,
                    "file": fname,
                }
            )
    grid = cfg.grid()
    new_manifest = dict(manifest)
    new_manifest.update(
        {"layout": "structured", "grid_nx": grid.nx, "grid_ny": grid.ny,
         "cases": entries}
    )
    (out / "manifest.json").write_text(
        json.dumps(new_manifest, indent=1, sort_keys=True)
    )
    report = MetricReport()
    for kind, velocity, pct in fidelity:
        report.add("interp_fidelity_pct", f"{kind}_u{velocity:g}", "idw",
                   f"scale{cfg.interp_spec().scale}", pct)
    report.write_csv(out / "fidelity_report.csv")
    print(f"wrote {len(entries)} structured cases to {out}")
    return 0


def _series_by_kind(data_dir: Path, kind: str) -> tuple[dict, dict]:
    manifest = _load_manifest(data_dir)
    cases, roles = {}, {}
    for entry in manifest["cases"]:
        if entry["field_kind"] != kind:
            continue
        velocity = entry["inlet_velocity"]
        cases[velocity] = load_series(data_dir / entry["file"])
        roles[velocity] = entry["role"]
    if not cases:
        raise DataError(f"no {kind} cases under {data_dir}")
    return cases, roles


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    kind = args.field
    data_dir = Path(args.data)
    cases, _ = _series_by_kind(data_dir, kind)
    split = cfg.split(kind)
    missing = [
        m.inlet_velocity
        for m in split.train + split.val
        if m.inlet_velocity not in cases
    ]
    if missing:
        raise DataError(f"dataset lacks velocities {missing} for {kind}")
    out = Path(args.out)
    needs_grid = args.model in ("cae", "fno", "mscale-fno")
    sample = next(iter(cases.values()))
    if needs_grid and not isinstance(sample, StructuredSeries):
        raise DataError(f"model {args.model} needs a structured dataset (run interp)")
    if args.model in ("ldon", "ms-ldon"):
        if not args.ae:
            raise ConfigError(f"model {args.model} requires --ae <checkpoint>")
        ae, _ = load_ae(args.ae)
    cfg.echo(out)
    if args.model == "mlp-ae":
        model, history = train_mlp_ae_stage(cfg, split, cases, kind)
        save_ae(out / "checkpoint.nosg", model, "mlp-ae")
    elif args.model == "cae":
        model, history = train_cae_stage(cfg, split, cases, kind)
        save_ae(out / "checkpoint.nosg", model, "cae")
    elif args.model in ("ldon", "ms-ldon"):
        model, history = train_ldon_stage(
            cfg, ae, split, cases, kind, multiscale=args.model == "ms-ldon"
        )
        save_operator(out / "checkpoint.nosg", model, args.model)
    elif args.model == "fno":
        modes = tuple(int(x) for x in args.modes.split(",")) if args.modes else None
        model, history = train_fno_stage(cfg, split, cases, kind, modes=modes)
        save_operator(out / "checkpoint.nosg", model, "fno")
    elif args.model == "mscale-fno":
        model, history = train_mscale_fno_stage(cfg, split, cases, kind)
        save_operator(out / "checkpoint.nosg", model, "mscale-fno")
    else:
        raise ConfigError(f"unknown model {args.model!r}")
    history.write_csv(out / "history.csv")
    print(
        f"trained {args.model} on {kind}: final val loss {history.val_loss[-1]:.4e}"
    )
    return 0


def cmd_predict(args) -> int:
    data_dir = Path(args.data)
    ref = load_series(_case_file(data_dir, args.field, args.case))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        model, kind = load_operator(args.checkpoint)
    except FlowopError:
        raise DataError(f"{args.checkpoint} is not an operator checkpoint") from None
    if kind in ("ldon", "ms-ldon"):
        if not args.ae:
            raise ConfigError("latent operators require --ae <checkpoint>")
        ae, _ = load_ae(args.ae)
        pred = predict_ldon_series(model, ae, ref)
    else:
        if not isinstance(ref, StructuredSeries):
            raise DataError(f"{kind} predicts on structured data; got unstructured")
        pred = predict_grid_series(model, ref)
    fname = f"pred_{kind}_{case_name(ref.meta)}.nosg"
    save_series(out / fname, pred)
    print(f"wrote {out / fname}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    pred = load_series(args.pred)
    ref = load_series(args.ref)
    out = Path(args.out)
    ev = evaluate_case(pred, ref, band=cfg["dtw.band"])
    cfg.echo(out)
    case = case_name(ref.meta)
    report = evaluation_rows(ev, case, args.model)
    for metric in sorted(report.metrics()):
        report.write_csv(out / f"{metric}.csv", metric=metric)
    times = ref.meta.times
    for probe in default_probes():
        write_signal_csv(
            out / f"probe_{probe.label}_{args.model}_{case}.csv",
            times,
            ev.probe_signals[probe.label],
        )
    print(f"evaluated {args.model} on {case}: relative L2 {ev.relative_l2_mean:.4f}")
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    if not run_dir.is_dir():
        raise DataError(f"run directory {run_dir} does not exist")
    rows = []
    for csv_path in sorted(run_dir.rglob("*.csv")):
        with open(csv_path) as fh:
            header = fh.readline().strip()
            if header != "metric,case,model,key,value":
                continue
            for line in fh:
                metric, case, model, key, value = line.strip().split(",")
                rows.append((metric, case, model, key, float(value)))
    if not rows:
        raise DataError(f"no metric CSVs under {run_dir}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary_metrics = sorted(
        {m for m, *_ in rows if m.endswith("_mean") or m.endswith("_pct")}
    )
    written = []
    for metric in summary_metrics:
        cases = sorted({r[1] for r in rows if r[0] == metric})
        models = sorted({r[2] for r in rows if r[0] == metric})
        lines = ["model," + ",".join(cases)]
        for model in models:
            cells = [model]
            for case in cases:
                vals = [
                    r[4] for r in rows if r[0] == metric and r[1] == case
                    and r[2] == model
                ]
                cells.append(repr(float(np.mean(vals))) if vals else "")
            lines.append(",".join(cells))
        path = out / f"comparison_{metric}.csv"
        path.write_text("\n".join(lines) + "\n")
        written.append(path.name)
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowop",
        description="Vortex-street surrogate pipeline: data, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate the synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("interp", help="project unstructured cases onto a grid")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="gen-data output directory")
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--mask-factor", type=float, default=None)
    p.set_defaults(fn=cmd_interp)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--field", required=True, choices=("velocity", "pressure"))
    p.add_argument("--ae", default=None, help="AE checkpoint for latent operators")
    p.add_argument("--modes", default=None, help="override FNO modes, e.g. 12,12")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="predict a case from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--ae", default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--case", type=float, required=True, help="inlet velocity")
    p.add_argument("--field", required=True, choices=("velocity", "pressure"))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("evaluate", help="compare a prediction with its reference")
    p.add_argument("--config", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--model", required=True, help="model label for report rows")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("report", help="consolidate metric CSVs into tables")
    p.add_argument("--run", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (DataError, ContainerError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except TrainingDiverged as err:
        print(f"training diverged: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

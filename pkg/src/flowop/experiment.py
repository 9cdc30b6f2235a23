"""Pipeline stages shared by the CLI, the experiment scripts, and the
acceptance suite: dataset generation, projection, model training,
prediction, and per-case evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DatasetSplit
from .errors import ConfigError, DataError
from .fields import (
    CaseMeta,
    Series,
    StructuredSeries,
    UnstructuredSeries,
    to_difference,
)
from .interp import fidelity_report, project
from .metrics import (
    MetricReport,
    capture_report,
    default_probes,
    dtw_report,
    pressure_drop_error,
    probe_history,
    relative_l2_series,
)
from .operators import (
    DeepOnet,
    Fno,
    LatentDataset,
    MscaleFno,
    build_latent_dataset,
    l_deeponet_predict,
    normalized_times,
    train_deeponet,
    train_grid_operator,
)
from .rng import substream_seed
from .rom import (
    ConvAutoencoder,
    MlpAutoencoder,
    Standardizer,
    TrainedAe,
    train_ae,
)
from .runconfig import RunConfig
from .synth import mesh_nodes, synth_unstructured

GRID_MODELS = ("cae", "fno", "mscale-fno")


def case_name(meta: CaseMeta) -> str:
    return f"{meta.field_kind}_u{meta.inlet_velocity:g}"


def generate_cases(cfg: RunConfig) -> tuple[np.ndarray, dict, dict]:
    """Shared node layout plus all unstructured series, keyed per field kind."""
    geom = cfg.geometry()
    model = cfg.wake_model()
    nodes = mesh_nodes(geom, cfg.mesh_spec())
    splits: dict[str, DatasetSplit] = {}
    series: dict[str, dict[float, UnstructuredSeries]] = {}
    for kind in cfg.field_kinds():
        split = cfg.split(kind)
        splits[kind] = split
        series[kind] = {
            m.inlet_velocity: synth_unstructured(m, geom, model, nodes)
            for m in split.all_cases
        }
    return nodes, splits, series


def project_cases(
    cfg: RunConfig, series: dict, scale: int | None = None
) -> tuple[dict, list[tuple[str, float, float]]]:
    """IDW-project every case onto the configured grid; fidelity for pressure."""
    grid = cfg.grid(scale)
    spec = cfg.interp_spec(scale)
    structured: dict[str, dict[float, StructuredSeries]] = {}
    fidelity: list[tuple[str, float, float]] = []
    for kind, cases in series.items():
        structured[kind] = {}
        for velocity, s in cases.items():
            proj = project(s, grid, spec)
            structured[kind][velocity] = proj
            if kind == "pressure":
                fidelity.append((kind, velocity, fidelity_report(s, proj)))
    return structured, fidelity


def snapshot_matrix(series_list: list[Series]) -> np.ndarray:
    """AE training snapshots: each case contributes u0 and its difference frames."""
    parts = []
    for s in series_list:
        parts.append(s.values[:1])
        parts.append(to_difference(s).values)
    return np.concatenate(parts, axis=0)


def _split_series(split: DatasetSplit, cases: dict[float, Series]):
    train = [cases[m.inlet_velocity] for m in split.train]
    val = [cases[m.inlet_velocity] for m in split.val]
    return train, val


def train_mlp_ae_stage(cfg: RunConfig, split: DatasetSplit, cases: dict, kind: str):
    train_series, val_series = _split_series(split, cases)
    x_train = snapshot_matrix(train_series)
    x_val = snapshot_matrix(val_series)
    model = MlpAutoencoder(
        cfg.mlp_ae_config(x_train.shape[1]), seed=substream_seed(cfg.seed, "mlp-ae", kind)
    )
    scaler = Standardizer.fit(x_train)
    return train_ae(
        model, x_train, x_val, scaler, seed=substream_seed(cfg.seed, "mlp-ae-loop", kind)
    )


def train_cae_stage(cfg: RunConfig, split: DatasetSplit, cases: dict, kind: str):
    train_series, val_series = _split_series(split, cases)
    mask = train_series[0].solid_mask
    x_train = snapshot_matrix(train_series)
    x_val = snapshot_matrix(val_series)
    model = ConvAutoencoder(
        cfg.cae_config(train_series[0].grid.shape),
        seed=substream_seed(cfg.seed, "cae", kind),
    )
    scaler = Standardizer.fit(x_train, keep=~mask)
    return train_ae(
        model, x_train, x_val, scaler,
        seed=substream_seed(cfg.seed, "cae-loop", kind), solid_mask=mask,
    )


def latent_sets(ae: TrainedAe, split: DatasetSplit, cases: dict) -> tuple[
    LatentDataset, LatentDataset
]:
    train_series, val_series = _split_series(split, cases)
    return build_latent_dataset(ae, train_series), build_latent_dataset(ae, val_series)


def train_ldon_stage(
    cfg: RunConfig, ae: TrainedAe, split: DatasetSplit, cases: dict,
    kind: str, multiscale: bool,
):
    data, val_data = latent_sets(ae, split, cases)
    label = "ms-ldon" if multiscale else "ldon"
    model = DeepOnet(
        cfg.ldon_config(ae.latent_dim, multiscale),
        seed=substream_seed(cfg.seed, label, kind),
    )
    history = train_deeponet(
        model, data, val_data, seed=substream_seed(cfg.seed, label + "-loop", kind)
    )
    return model, history


def grid_arrays(split_cases: list[StructuredSeries]):
    inputs = np.stack([s.values[0][None] for s in split_cases])
    targets = np.stack([to_difference(s).values for s in split_cases])
    return inputs, targets


def train_fno_stage(
    cfg: RunConfig, split: DatasetSplit, cases: dict, kind: str,
    modes: tuple[int, int] | None = None,
):
    train_series, val_series = _split_series(split, cases)
    x_tr, y_tr = grid_arrays(train_series)
    x_va, y_va = grid_arrays(val_series)
    out_channels = cfg["n_timesteps"] - 1
    label = f"fno-{(modes or tuple(cfg['fno.modes']))[0]}"
    model = Fno(
        cfg.fno_config(out_channels, modes), seed=substream_seed(cfg.seed, label, kind)
    )
    history = train_grid_operator(
        model, x_tr, y_tr, x_va, y_va,
        seed=substream_seed(cfg.seed, label + "-loop", kind),
    )
    return model, history


def train_mscale_fno_stage(cfg: RunConfig, split: DatasetSplit, cases: dict, kind: str):
    train_series, val_series = _split_series(split, cases)
    x_tr, y_tr = grid_arrays(train_series)
    x_va, y_va = grid_arrays(val_series)
    out_channels = cfg["n_timesteps"] - 1
    model = MscaleFno(
        cfg.mscale_fno_config(out_channels),
        seed=substream_seed(cfg.seed, "mscale-fno", kind),
    )
    history = train_grid_operator(
        model, x_tr, y_tr, x_va, y_va,
        seed=substream_seed(cfg.seed, "mscale-fno-loop", kind),
    )
    return model, history


# -- prediction ---------------------------------------------------------------


def predict_ldon_series(model: DeepOnet, ae: TrainedAe, ref: Series) -> Series:
    """Full predicted series on the reference geometry (frame 0 is the input)."""
    times = normalized_times(ref.meta.n_timesteps)
    u0 = ref.values[0]
    frames = l_deeponet_predict(model, ae, u0, times)
    values = np.concatenate([u0[None], frames], axis=0)
    if isinstance(ref, StructuredSeries):
        values[:, ref.solid_mask] = 0.0
        return StructuredSeries(ref.meta, ref.grid, ref.solid_mask, values)
    return UnstructuredSeries(ref.meta, ref.node_xy, values)


def predict_grid_series(model, ref: StructuredSeries) -> StructuredSeries:
    u0 = ref.values[0]
    diffs = model.predict(u0[None, None])[0]
    if diffs.shape[0] != ref.meta.n_timesteps - 1:
        raise DataError(
            f"operator emits {diffs.shape[0]} frames for a "
            f"{ref.meta.n_timesteps}-step case"
        )
    values = np.concatenate([u0[None], diffs + u0[None]], axis=0)
    values[:, ref.solid_mask] = 0.0
    return StructuredSeries(ref.meta, ref.grid, ref.solid_mask, values)


# -- evaluation -----------------------------------------------------------------


@dataclass(frozen=True)
class CaseEvaluation:
    relative_l2_mean: float
    relative_l2: np.ndarray
    dtw_mean: float
    dtw_per_probe: dict[str, float]
    capture_mean: float
    capture_per_probe: dict[str, float]
    pressure_drop_error_mean: float | None
    probe_signals: dict[str, np.ndarray]
    ref_signals: dict[str, np.ndarray]


def evaluate_case(
    pred: Series, ref: Series, band: int = 17,
    window: tuple[int, int] | None = None,
) -> CaseEvaluation:
    rel = relative_l2_series(pred, ref)
    probes = default_probes()
    pred_sig = probe_history(pred, probes)
    ref_sig = probe_history(ref, probes)
    dtw = dtw_report(pred_sig, ref_sig, window=window, band=band)
    caps = capture_report(pred_sig, ref_sig)
    drop_err = None
    if ref.meta.field_kind == "pressure":
        drop_err = pressure_drop_error(pred, ref).mean
    return CaseEvaluation(
        relative_l2_mean=rel.mean,
        relative_l2=rel.per_timestep,
        dtw_mean=dtw.mean,
        dtw_per_probe=dtw.per_probe,
        capture_mean=float(np.mean(list(caps.values()))),
        capture_per_probe=caps,
        pressure_drop_error_mean=drop_err,
        probe_signals=pred_sig,
        ref_signals=ref_sig,
    )


def evaluation_rows(
    ev: CaseEvaluation, case: str, model: str, report: MetricReport | None = None
) -> MetricReport:
    out = report if report is not None else MetricReport()
    for t, v in enumerate(ev.relative_l2):
        out.add("relative_l2", case, model, str(t), v)
    out.add("relative_l2_mean", case, model, "mean", ev.relative_l2_mean)
    for probe, v in sorted(ev.dtw_per_probe.items()):
        out.add("dtw", case, model, probe, v)
    out.add("dtw_mean", case, model, "mean", ev.dtw_mean)
    for probe, v in sorted(ev.capture_per_probe.items()):
        out.add("capture_ratio", case, model, probe, v)
    out.add("capture_ratio_mean", case, model, "mean", ev.capture_mean)
    if ev.pressure_drop_error_mean is not None:
        out.add(
            "pressure_drop_error_pct", case, model, "mean",
            ev.pressure_drop_error_mean,
        )
    return out

"""Quantitative evaluation: relative L2 over time, z-score banded DTW,
pressure drop, probe time histories, and oscillation-capture diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError, ShapeError
from .fields import Series, StructuredSeries, UnstructuredSeries


@dataclass(frozen=True)
class Probe:
    label: str
    x: float
    y: float


def default_probes() -> tuple[Probe, ...]:
    """Six wake probes: centerline and +-0.02 m offsets at two stations."""
    return (
        Probe("P1", 0.0, 0.0),
        Probe("P2", 0.0, 0.02),
        Probe("P3", 0.0, -0.02),
        Probe("P4", 0.05, 0.0),
        Probe("P5", 0.05, 0.02),
        Probe("P6", 0.05, -0.02),
    )


# -- relative L2 ----------------------------------------------------------------


@dataclass(frozen=True)
class SeriesMetric:
    per_timestep: np.ndarray
    mean: float


def relative_l2_series(pred: Series, ref: Series) -> SeriesMetric:
    """Per-timestep ||pred - ref|| / ||ref|| over unmasked cells, plus the mean."""
    if pred.values.shape != ref.values.shape:
        raise ShapeError(
            f"series shapes disagree: {pred.values.shape} vs {ref.values.shape}"
        )
    p, r = pred.values, ref.values
    if isinstance(ref, StructuredSeries):
        keep = ~ref.solid_mask
        if isinstance(pred, StructuredSeries) and not np.array_equal(
            pred.solid_mask, ref.solid_mask
        ):
            raise DataError("prediction and reference masks differ")
        p = p[:, keep]
        r = r[:, keep]
    else:
        p = p.reshape(p.shape[0], -1)
        r = r.reshape(r.shape[0], -1)
    ref_norm = np.linalg.norm(r, axis=1)
    if np.any(ref_norm == 0.0):
        t = int(np.argmin(ref_norm))
        raise DomainError(f"reference frame {t} has zero norm")
    vals = np.linalg.norm(p - r, axis=1) / ref_norm
    return SeriesMetric(vals, float(vals.mean()))


def aggregate_relative_l2(pred: np.ndarray, ref: np.ndarray) -> float:
    """Whole-set relative L2: ||pred - ref||_F / ||ref||_F."""
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise DomainError("reference has zero norm")
    return float(np.linalg.norm(pred - ref) / denom)


# -- DTW -------------------------------------------------------------------------


def zscore(signal: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance normalization (population std)."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.shape[0] < 2:
        raise DomainError(f"zscore needs a 1-d signal of length >= 2, got {signal.shape}")
    std = signal.std()
    if std == 0.0:
        raise DomainError("zscore of a constant signal")
    return (signal - signal.mean()) / std


def dtw_banded(x: np.ndarray, y: np.ndarray, w: int) -> float:
    """Min-cost monotone warping distance with the |i - j| <= w band.

    Symmetric step pattern (match/insert/delete, each costing |x_i - y_j|),
    endpoints anchored at (0, 0) and (N-1, N-1).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ShapeError(f"dtw_banded needs equal-length signals, got {x.shape}, {y.shape}")
    if w < 0:
        raise DomainError(f"band radius must be >= 0, got {w}")
    n = x.shape[0]
    inf = np.inf
    prev = np.full(n, inf)
    for i in range(n):
        lo = max(0, i - w)
        hi = min(n - 1, i + w)
        cur = np.full(n, inf)
        for j in range(lo, hi + 1):
            cost = abs(x[i] - y[j])
            if i == 0 and j == 0:
                cur[j] = cost
                continue
            best = inf
            if i > 0:
                best = min(best, prev[j])
                if j > 0:
                    best = min(best, prev[j - 1])
            if j > 0:
                best = min(best, cur[j - 1])
            cur[j] = cost + best
        prev = cur
    result = prev[n - 1]
    assert np.isfinite(result), "band failed to connect endpoints"
    return float(result)


@dataclass(frozen=True)
class DtwReport:
    per_probe: dict[str, float]
    mean: float
    window: tuple[int, int]
    band: int


def dtw_report(
    pred_signals: dict[str, np.ndarray],
    ref_signals: dict[str, np.ndarray],
    window: tuple[int, int] | None = None,
    band: int = 17,
) -> DtwReport:
    """Z-score each windowed probe signal, then banded DTW per probe.

    ``window`` is an inclusive frame range; None selects the fully-developed
    regime, i.e. the last 60 percent of the series.
    """
    if set(pred_signals) != set(ref_signals):
        raise DataError("probe label sets differ")
    per = {}
    for label in sorted(pred_signals):
        p, r = pred_signals[label], ref_signals[label]
        if p.shape != r.shape:
            raise ShapeError(f"probe {label}: signal lengths differ")
        n = p.shape[0]
        lo, hi = window if window is not None else (int(0.4 * n), n - 1)
        if not (0 <= lo < hi < n):
            raise DomainError(f"window {(lo, hi)} invalid for length {n}")
        try:
            per[label] = dtw_banded(zscore(p[lo : hi + 1]), zscore(r[lo : hi + 1]), band)
        except DomainError as err:
            raise DomainError(f"probe {label}: {err}") from None
    mean = float(np.mean(list(per.values())))
    return DtwReport(per, mean, (lo, hi), band)


# -- pressure drop ----------------------------------------------------------------


def pressure_drop(series: StructuredSeries) -> SeriesMetric:
    """Area-averaged first-column minus last-column pressure, per timestep."""
    if series.meta.field_kind != "pressure":
        raise DataError(f"pressure_drop needs a pressure series, got {series.meta.field_kind}")
    if not isinstance(series, StructuredSeries):
        raise DataError("pressure_drop needs a structured series")
    keep_in = ~series.solid_mask[:, 0]
    keep_out = ~series.solid_mask[:, -1]
    if not keep_in.any() or not keep_out.any():
        raise DomainError("a boundary column is fully masked")
    drops = series.values[:, keep_in, 0].mean(axis=1) - series.values[
        :, keep_out, -1
    ].mean(axis=1)
    return SeriesMetric(drops, float(drops.mean()))


def pressure_drop_error(pred: StructuredSeries, ref: StructuredSeries) -> SeriesMetric:
    """Per-timestep relative error (percent) of the predicted pressure drop."""
    dp = pressure_drop(pred).per_timestep
    dr = pressure_drop(ref).per_timestep
    if np.any(dr == 0.0):
        raise DomainError("reference pressure drop crosses zero")
    err = np.abs(dp - dr) / np.abs(dr) * 100.0
    return SeriesMetric(err, float(err.mean()))


# -- probe histories ----------------------------------------------------------------


def _bilinear(series: StructuredSeries, probe: Probe) -> np.ndarray:
    g = series.grid
    fx = (probe.x - g.x_min) / g.dx
    fy = (probe.y - g.y_min) / g.dy
    i0 = int(np.clip(np.floor(fy), 0, g.ny - 2))
    j0 = int(np.clip(np.floor(fx), 0, g.nx - 2))
    ty, tx = fy - i0, fx - j0
    corners = [(i0, j0), (i0, j0 + 1), (i0 + 1, j0), (i0 + 1, j0 + 1)]
    weights = [(1 - ty) * (1 - tx), (1 - ty) * tx, ty * (1 - tx), ty * tx]
    free = [not series.solid_mask[i, j] for i, j in corners]
    if all(free):
        return sum(
            w * series.values[:, i, j] for (i, j), w in zip(corners, weights)
        )
    if not any(free):
        raise DataError(f"probe {probe.label} sits in a fully masked neighborhood")
    # fall back to the nearest unmasked corner (ties: lowest flat index)
    cand = [
        (np.hypot((i - fy) * g.dy, (j - fx) * g.dx), i * g.nx + j, (i, j))
        for (i, j), ok in zip(corners, free)
        if ok
    ]
    _, _, (i, j) = min(cand)
    return series.values[:, i, j]


def probe_history(series: Series, probes: tuple[Probe, ...]) -> dict[str, np.ndarray]:
    """Per-probe signals: nearest node (unstructured) or bilinear (structured)."""
    labels = [p.label for p in probes]
    if len(set(labels)) != len(labels):
        raise DataError("probe labels must be unique")
    out = {}
    if isinstance(series, UnstructuredSeries):
        from .interp import KdTree2

        tree = KdTree2(series.node_xy)
        for probe in probes:
            _, idx = tree.query((probe.x, probe.y), 1)
            out[probe.label] = series.values[:, idx[0]].copy()
    else:
        for probe in probes:
            g = series.grid
            if not (g.x_min <= probe.x <= g.x_max and g.y_min <= probe.y <= g.y_max):
                raise DataError(f"probe {probe.label} lies outside the grid")
            out[probe.label] = np.asarray(_bilinear(series, probe))
    return out


# -- oscillation capture -------------------------------------------------------------


def oscillation_capture_ratio(pred: np.ndarray, ref: np.ndarray) -> float:
    """|FFT(pred)| / |FFT(ref)| at the reference's dominant nonzero bin."""
    pred = np.asarray(pred, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if pred.shape != ref.shape or pred.ndim != 1:
        raise ShapeError("capture ratio needs equal-length 1-d signals")
    ref_spec = np.abs(np.fft.rfft(ref))
    if ref_spec.shape[0] < 2 or ref_spec[1:].max() == 0.0:
        raise DomainError("reference signal has no oscillatory content")
    k = 1 + int(np.argmax(ref_spec[1:]))
    pred_spec = np.abs(np.fft.rfft(pred))
    return float(pred_spec[k] / ref_spec[k])


def capture_report(
    pred_signals: dict[str, np.ndarray],
    ref_signals: dict[str, np.ndarray],
    window: tuple[int, int] | None = None,
) -> dict[str, float]:
    out = {}
    for label in sorted(pred_signals):
        p, r = pred_signals[label], ref_signals[label]
        n = p.shape[0]
        lo, hi = window if window is not None else (0, n - 1)
        out[label] = oscillation_capture_ratio(p[lo : hi + 1], r[lo : hi + 1])
    return out


# -- report rows ------------------------------------------------------------------


@dataclass
class MetricReport:
    """Flat rows for CSV export: (metric, case, model, key, value)."""

    rows: list[tuple[str, str, str, str, float]] = field(default_factory=list)

    def add(self, metric: str, case: str, model: str, key: str, value: float):
        self.rows.append((metric, case, model, key, float(value)))

    def extend(self, other: "MetricReport"):
        self.rows.extend(other.rows)

    def write_csv(self, path, metric: str | None = None):
        lines = ["metric,case,model,key,value"]
        for row in self.rows:
            if metric is None or row[0] == metric:
                lines.append(",".join([*row[:4], repr(row[4])]))
        from pathlib import Path

        Path(path).write_text("\n".join(lines) + "\n")

    def metrics(self) -> set[str]:
        return {r[0] for r in self.rows}

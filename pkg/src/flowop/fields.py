"""Field series containers and the difference-field transform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, ShapeError

FIELD_KINDS = ("velocity", "pressure")


@dataclass(frozen=True)
class CaseMeta:
    """One inlet-velocity case of one field kind."""

    inlet_velocity: float
    field_kind: str
    n_timesteps: int
    snapshot_interval: float

    def __post_init__(self):
        if self.inlet_velocity <= 0:
            raise ConfigError(f"inlet velocity must be positive, got {self.inlet_velocity}")
        if self.field_kind not in FIELD_KINDS:
            raise ConfigError(f"field kind must be one of {FIELD_KINDS}, got {self.field_kind!r}")
        if self.n_timesteps < 2:
            raise ConfigError(f"need at least 2 timesteps, got {self.n_timesteps}")
        if self.snapshot_interval <= 0:
            raise ConfigError(f"snapshot interval must be positive, got {self.snapshot_interval}")

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_timesteps) * self.snapshot_interval


@dataclass(frozen=True)
class GridSpec:
    """Uniform structured grid over a rectangular domain (endpoints included)."""

    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ConfigError(f"grid needs >= 2 points per axis, got {self.nx}x{self.ny}")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ConfigError("grid extents are empty")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        """(H, W) = (ny, nx): row index runs along y, column along x."""
        return (self.ny, self.nx)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays (X, Y) of shape [ny, nx]."""
        xs = np.linspace(self.x_min, self.x_max, self.nx)
        ys = np.linspace(self.y_min, self.y_max, self.ny)
        return np.meshgrid(xs, ys, indexing="xy")

    def flat_points(self) -> np.ndarray:
        gx, gy = self.points()
        return np.column_stack([gx.ravel(), gy.ravel()])


def _check_values(values: np.ndarray, meta: CaseMeta, is_difference: bool):
    expected = meta.n_timesteps - 1 if is_difference else meta.n_timesteps
    if values.shape[0] != expected:
        raise ShapeError(
            f"values have {values.shape[0]} frames, expected {expected} "
            f"({'difference' if is_difference else 'full'} series)"
        )


@dataclass(frozen=True)
class UnstructuredSeries:
    """Scattered-node field samples: node_xy [N, 2], values [T, N]."""

    meta: CaseMeta
    node_xy: np.ndarray
    values: np.ndarray
    is_difference: bool = False
    baseline: np.ndarray | None = None  # initial field of a difference series

    def __post_init__(self):
        object.__setattr__(self, "node_xy", np.asarray(self.node_xy, dtype=np.float64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.node_xy.ndim != 2 or self.node_xy.shape[1] != 2:
            raise ShapeError(f"node_xy must be [N, 2], got {self.node_xy.shape}")
        _check_values(self.values, self.meta, self.is_difference)
        if self.values.shape[1] != self.node_xy.shape[0]:
            raise ShapeError(
                f"values have {self.values.shape[1]} columns for {self.node_xy.shape[0]} nodes"
            )
        uniq = np.unique(self.node_xy, axis=0)
        if uniq.shape[0] != self.node_xy.shape[0]:
            raise DataError("duplicate node coordinates")
        if self.baseline is not None:
            base = np.asarray(self.baseline, dtype=np.float64)
            if base.shape != (self.node_xy.shape[0],):
                raise ShapeError("baseline shape does not match node count")
            object.__setattr__(self, "baseline", base)

    @property
    def n_nodes(self) -> int:
        return self.node_xy.shape[0]


@dataclass(frozen=True)
class StructuredSeries:
    """Uniform-grid field samples: values [T, H, W] with a solid mask."""

    meta: CaseMeta
    grid: GridSpec
    solid_mask: np.ndarray
    values: np.ndarray
    is_difference: bool = False
    baseline: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "solid_mask", np.asarray(self.solid_mask, dtype=bool))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.solid_mask.shape != self.grid.shape:
            raise ShapeError(
                f"mask shape {self.solid_mask.shape} != grid shape {self.grid.shape}"
            )
        _check_values(self.values, self.meta, self.is_difference)
        if self.values.shape[1:] != self.grid.shape:
            raise ShapeError(
                f"value frames {self.values.shape[1:]} != grid shape {self.grid.shape}"
            )
        if np.any(self.values[:, self.solid_mask] != 0.0):
            raise DataError("masked cells must hold exactly 0 at every timestep")
        if self.baseline is not None:
            base = np.asarray(self.baseline, dtype=np.float64)
            if base.shape != self.grid.shape:
                raise ShapeError("baseline shape does not match the grid")
            object.__setattr__(self, "baseline", base)


Series = UnstructuredSeries | StructuredSeries


def _rebuild(series: Series, values, meta, is_difference, baseline):
    if isinstance(series, UnstructuredSeries):
        return UnstructuredSeries(meta, series.node_xy, values, is_difference, baseline)
    return StructuredSeries(
        meta, series.grid, series.solid_mask, values, is_difference, baseline
    )


def to_difference(series: Series) -> Series:
    """Subtract the initial frame; the identically-zero frame 0 is dropped.

    The initial field is kept on the result (``baseline``) so the full series
    can be recovered.
    """
    if series.is_difference:
        raise DataError("series is already a difference series")
    u0 = series.values[0]
    diffs = series.values[1:] - u0[None]
    return _rebuild(series, diffs, series.meta, True, u0.copy())


def recover_full(diff_series: Series, u0: np.ndarray | None = None) -> Series:
    """Add the initial field back and re-prepend it as frame 0."""
    if not diff_series.is_difference:
        raise DataError("recover_full expects a difference series")
    if u0 is None:
        u0 = diff_series.baseline
    if u0 is None:
        raise DataError("no initial field available for recovery")
    u0 = np.asarray(u0, dtype=np.float64)
    if u0.shape != diff_series.values.shape[1:]:
        raise ShapeError(
            f"initial field shape {u0.shape} != frame shape {diff_series.values.shape[1:]}"
        )
    full = np.concatenate([u0[None], diff_series.values + u0[None]], axis=0)
    return _rebuild(diff_series, full, diff_series.meta, False, None)


def series_equal(a: Series, b: Series) -> bool:
    """Bitwise equality of metadata, geometry, and values."""
    if type(a) is not type(b) or a.meta != b.meta or a.is_difference != b.is_difference:
        return False
    if isinstance(a, UnstructuredSeries):
        geom_ok = np.array_equal(a.node_xy, b.node_xy)
    else:
        geom_ok = a.grid == b.grid and np.array_equal(a.solid_mask, b.solid_mask)
    base_ok = (
        (a.baseline is None and b.baseline is None)
        or (
            a.baseline is not None
            and b.baseline is not None
            and np.array_equal(a.baseline, b.baseline)
        )
    )
    return geom_ok and base_ok and np.array_equal(a.values, b.values)

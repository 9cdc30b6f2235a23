"""Synthetic vortex-street dataset generator.

Closed-form velocity-magnitude and pressure fields over a rectangular
channel with a staggered array of circular obstacles.  The oscillatory term
is a travelling wave confined to a Gaussian wake corridor that opens
downstream of the last obstacle column, with a sign flip across the wake
centerline; its frequency scales linearly with the inlet velocity, so every
case carries a single dominant shedding tone below the snapshot Nyquist
rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fields import CaseMeta, GridSpec, StructuredSeries, UnstructuredSeries
from .rng import substream


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    r: float


@dataclass(frozen=True)
class Geometry:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    obstacles: tuple[Disc, ...] = ()

    def __post_init__(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ConfigError("domain extents are empty")
        for d in self.obstacles:
            inside = (
                self.x_min < d.cx - d.r
                and d.cx + d.r < self.x_max
                and self.y_min < d.cy - d.r
                and d.cy + d.r < self.y_max
            )
            if not inside:
                raise ConfigError(f"obstacle {d} is not strictly inside the domain")

    @property
    def length_x(self) -> float:
        return self.x_max - self.x_min

    @property
    def extents(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    def wake_origin(self) -> float:
        """Downstream edge of the last obstacle column (wake opening point)."""
        if not self.obstacles:
            return self.x_min
        return max(d.cx + d.r for d in self.obstacles)

    def inside_obstacle(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        mask = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for d in self.obstacles:
            mask |= (x - d.cx) ** 2 + (y - d.cy) ** 2 < d.r**2
        return mask


@dataclass(frozen=True)
class WakeModel:
    """Generator constants; defaults give a periodic street below Nyquist."""

    osc_amplitude: float = 0.3        # relative amplitude of the travelling wave
    wake_sigma: float = 0.02          # m, Gaussian corridor half-width
    wake_wavelength: float = 0.05     # m, streamwise wavelength
    pressure_coeff: float = 120.0     # Pa.s^2/m^2, static streamwise gradient
    pressure_ripple: float = 0.05     # relative oscillatory pressure amplitude
    freq_per_velocity: float = 5.0    # Hz per (m/s): shedding frequency f = c_f * U
    mean_gain: float = 0.15           # relative mean-flow excess along the corridor
    step_width: float = 0.01          # m, smoothness of the wake opening
    wake_center: float = 0.0          # m, corridor centerline y


def desk_geometry() -> Geometry:
    """Small staggered obstacle array in a 0.25 m x 0.094 m channel."""
    r = 0.006
    col0, col1, col2 = -0.085, -0.063, -0.041
    rows = (-0.028, 0.0, 0.028)
    rows_off = (-0.014, 0.014)
    discs = [Disc(col0, y, r) for y in rows]
    discs += [Disc(col1, y, r) for y in rows_off]
    discs += [Disc(col2, y, r) for y in rows]
    return Geometry(-0.10, 0.15, -0.047, 0.047, tuple(discs))


def shedding_frequency(meta: CaseMeta, model: WakeModel) -> float:
    f = model.freq_per_velocity * meta.inlet_velocity
    nyquist = 0.5 / meta.snapshot_interval
    if f > nyquist:
        raise ConfigError(
            f"shedding frequency {f} Hz exceeds snapshot Nyquist {nyquist} Hz"
        )
    return f


def _envelope(geom: Geometry, model: WakeModel, x, y):
    gauss = np.exp(-((y - model.wake_center) ** 2) / (2.0 * model.wake_sigma**2))
    step = 0.5 * (1.0 + np.tanh((x - geom.wake_origin()) / model.step_width))
    return gauss, step


def _wave_phase(meta: CaseMeta, geom: Geometry, model: WakeModel, x, t):
    f = shedding_frequency(meta, model)
    kappa = 2.0 * np.pi / model.wake_wavelength
    return 2.0 * np.pi * f * t - kappa * (x - geom.wake_origin())


def field_values(
    meta: CaseMeta, geom: Geometry, model: WakeModel, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """Evaluate the case field at flat sample points for all snapshots: [T, N]."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    u = meta.inlet_velocity
    times = meta.times[:, None]
    gauss, step = _envelope(geom, model, x, y)
    if meta.field_kind == "velocity":
        mean_flow = 1.0 + model.mean_gain * gauss * step
        phase = _wave_phase(meta, geom, model, x, times) + np.pi * np.sign(
            y - model.wake_center
        )
        return u * (mean_flow + model.osc_amplitude * gauss * step * np.sin(phase))
    static = model.pressure_coeff * u**2 * (1.0 - x / geom.length_x)
    phase = _wave_phase(meta, geom, model, x, times)
    return static + model.pressure_ripple * u**2 * gauss * np.sin(phase)


@dataclass(frozen=True)
class MeshSpec:
    """Shared scattered-node layout: jittered interior grid plus wall columns.

    The layout is a function of geometry and seed only, so every case of a
    dataset samples the same nodes (one mesh, many inlet conditions).
    """

    n_nodes: int = 2700
    wall_fraction: float = 0.04       # fraction of nodes pinned to each of x_min/x_max
    jitter: float = 0.35              # relative to the interior grid spacing
    seed: int = 0


def mesh_nodes(geom: Geometry, spec: MeshSpec) -> np.ndarray:
    """Deterministic node layout [N, 2] excluding obstacle interiors."""
    rng = substream(spec.seed, "mesh", spec.n_nodes)
    n_wall = max(2, int(round(spec.wall_fraction * spec.n_nodes)))
    n_interior_target = spec.n_nodes - 2 * n_wall
    if n_interior_target < 4:
        raise ConfigError(f"node budget {spec.n_nodes} too small")

    # oversample the interior grid: obstacle interiors will be dropped
    area = (geom.x_max - geom.x_min) * (geom.y_max - geom.y_min)
    solid = sum(np.pi * d.r**2 for d in geom.obstacles)
    aspect = (geom.x_max - geom.x_min) / (geom.y_max - geom.y_min)
    n_total = int(np.ceil(n_interior_target / max(1e-9, 1.0 - solid / area) * 1.15))
    ny = max(2, int(np.sqrt(n_total / aspect)))
    nx = max(2, int(np.ceil(n_total / ny)))
    margin_x = (geom.x_max - geom.x_min) / (nx + 1)
    margin_y = (geom.y_max - geom.y_min) / (ny + 1)
    xs = geom.x_min + margin_x * (np.arange(nx) + 1)
    ys = geom.y_min + margin_y * (np.arange(ny) + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    pts += rng.uniform(-spec.jitter, spec.jitter, pts.shape) * (margin_x, margin_y)
    keep = ~geom.inside_obstacle(pts[:, 0], pts[:, 1])
    pts = pts[keep]
    if pts.shape[0] < n_interior_target:
        raise ConfigError("interior sampling produced too few nodes; raise n_nodes")
    sel = rng.choice(pts.shape[0], size=n_interior_target, replace=False)
    interior = pts[np.sort(sel)]

    walls = []
    for xw in (geom.x_min, geom.x_max):
        yw = np.linspace(geom.y_min, geom.y_max, n_wall + 2)[1:-1]
        yw = yw + rng.uniform(-0.2, 0.2, n_wall) * (yw[1] - yw[0])
        walls.append(np.column_stack([np.full(n_wall, xw), yw]))
    nodes = np.vstack([interior] + walls)
    order = np.lexsort((nodes[:, 0], nodes[:, 1]))
    return nodes[order]


def synth_unstructured(
    meta: CaseMeta, geom: Geometry, model: WakeModel, nodes: np.ndarray
) -> UnstructuredSeries:
    values = field_values(meta, geom, model, nodes[:, 0], nodes[:, 1])
    return UnstructuredSeries(meta, nodes, values)


def synth_structured(
    meta: CaseMeta, geom: Geometry, model: WakeModel, grid: GridSpec
) -> StructuredSeries:
    gx, gy = grid.points()
    values = field_values(meta, geom, model, gx.ravel(), gy.ravel())
    values = values.reshape(meta.n_timesteps, *grid.shape)
    mask = geom.inside_obstacle(gx, gy)
    values[:, mask] = 0.0
    return StructuredSeries(meta, grid, mask, values)

"""Plain-text key/value run configuration.

Lines are ``key = value`` with ``#`` comments; unknown keys are rejected.
Every command echoes the fully resolved configuration (defaults applied) to
``resolved_config.txt`` in its output directory before writing anything else.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .dataset import DatasetSplit, desk_ladder, make_split, paper_ladder
from .errors import ConfigError
from .fields import GridSpec
from .interp import InterpSpec, scale_grid
from .operators import (
    DeepOnetConfig,
    FnoConfig,
    MscaleFnoConfig,
    OperatorTrainSpec,
)
from .rom import ConvAeConfig, MlpAeConfig, TrainSpec
from .synth import Geometry, MeshSpec, WakeModel, desk_geometry


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "yes", "1"):
        return True
    if s.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in s.split(",") if tok.strip())


def _parse_ints(s: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in s.split(",") if tok.strip())


_PARSERS = {int: int, float: float, str: str, bool: _parse_bool,
            "floats": _parse_floats, "ints": _parse_ints}

# key -> (type tag, default)
SCHEMA: dict[str, tuple] = {
    "seed": (int, 2025),
    "field_kinds": (str, "velocity,pressure"),
    "n_timesteps": (int, 50),
    "snapshot_interval": (float, 0.1),
    "n_nodes": (int, 2700),
    "ladder": (str, "desk"),            # desk | paper | custom
    "velocities": ("floats", ()),       # used when ladder = custom
    "val_velocities": ("floats", ()),   # empty -> ladder default
    "test_velocities": ("floats", (0.4, 0.7)),
    "geometry": (str, "desk"),
    "grid_nx": (int, 128),
    "grid_ny": (int, 48),
    "interp.k": (int, 6),
    "interp.p": (float, 1.0),
    "interp.mask_factor": (float, 2.5),
    "interp.scale": (int, 1),
    "gen.osc_amplitude": (float, 0.3),
    "gen.wake_sigma": (float, 0.02),
    "gen.wake_wavelength": (float, 0.05),
    "gen.pressure_coeff": (float, 120.0),
    "gen.pressure_ripple": (float, 0.05),
    "gen.freq_per_velocity": (float, 5.0),
    "gen.mean_gain": (float, 0.15),
    "gen.step_width": (float, 0.01),
    "gen.wake_center": (float, 0.0),
    "mlp_ae.hidden": ("ints", (384, 128)),
    "mlp_ae.latent_dim": (int, 64),
    "mlp_ae.lr": (float, 1e-3),
    "mlp_ae.weight_decay": (float, 1e-6),
    "mlp_ae.batch": (int, 64),
    "mlp_ae.epochs": (int, 150),
    "cae.channels": ("ints", (8, 16, 32, 32)),
    "cae.latent_dim": (int, 64),
    "cae.kernel": (int, 3),
    "cae.lr": (float, 1e-3),
    "cae.weight_decay": (float, 1e-6),
    "cae.batch": (int, 64),
    "cae.epochs": (int, 150),
    "ldon.basis": (int, 16),
    "ldon.branch_layers": (int, 6),
    "ldon.branch_width": (int, 192),
    "ldon.trunk_layers": (int, 3),
    "ldon.trunk_width": (int, 64),
    "ldon.scales": ("floats", (1.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0,
                               200.0, 300.0, 500.0)),
    "ldon.lr": (float, 1e-3),
    "ldon.decay_rate": (float, 0.9),
    "ldon.decay_every": (int, 300),
    "ldon.batch": (int, 8),
    "ldon.epochs": (int, 3000),
    "fno.modes": ("ints", (24, 24)),
    "fno.width": (int, 24),
    "fno.depth": (int, 4),
    "fno.activation": (str, "gelu"),
    "fno.lr": (float, 1e-3),
    "fno.weight_decay": (float, 1e-4),
    "fno.batch": (int, 6),
    "fno.epochs": (int, 500),
    "mscale_fno.subnets": (int, 6),
    "mscale_fno.scales": ("floats", (1.0, 40.0, 80.0, 100.0, 140.0, 200.0)),
    "mscale_fno.width": (int, 12),
    "mscale_fno.depth": (int, 4),
    "mscale_fno.activation": (str, "sin"),
    "mscale_fno.lr": (float, 1e-3),
    "mscale_fno.weight_decay": (float, 1e-4),
    "mscale_fno.batch": (int, 6),
    "mscale_fno.epochs": (int, 300),
    "dtw.band": (int, 17),
}

DESK_LADDER_VAL = (0.37, 0.43, 0.50)


@dataclass(frozen=True)
class RunConfig:
    values: dict

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        overrides = {}
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in overrides:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            overrides[key] = value
        return cls.from_overrides(overrides, source=str(path))

    @classmethod
    def from_overrides(cls, overrides: dict, source: str = "<dict>") -> "RunConfig":
        values = {k: default for k, (_, default) in SCHEMA.items()}
        for key, raw in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"{source}: unknown configuration key {key!r}")
            tag = SCHEMA[key][0]
            if isinstance(raw, str):
                try:
                    values[key] = _PARSERS[tag](raw)
                except ValueError as err:
                    raise ConfigError(f"{source}: bad value for {key}: {err}") from None
            else:
                values[key] = raw
        return cls(values)

    @classmethod
    def default(cls) -> "RunConfig":
        return cls.from_overrides({})

    def __getitem__(self, key: str):
        return self.values[key]

    def echo(self, out_dir) -> Path:
        """Write the resolved configuration next to the run outputs."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        lines = []
        for key in sorted(self.values):
            v = self.values[key]
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{key} = {v}")
        path = out_dir / "resolved_config.txt"
        path.write_text("\n".join(lines) + "\n")
        return path

    # -- domain objects ---------------------------------------------------

    @property
    def seed(self) -> int:
        return self["seed"]

    def field_kinds(self) -> tuple[str, ...]:
        kinds = tuple(k.strip() for k in self["field_kinds"].split(",") if k.strip())
        if not kinds:
            raise ConfigError("field_kinds is empty")
        return kinds

    def geometry(self) -> Geometry:
        if self["geometry"] != "desk":
            raise ConfigError(f"unknown geometry preset {self['geometry']!r}")
        return desk_geometry()

    def wake_model(self) -> WakeModel:
        return WakeModel(
            osc_amplitude=self["gen.osc_amplitude"],
            wake_sigma=self["gen.wake_sigma"],
            wake_wavelength=self["gen.wake_wavelength"],
            pressure_coeff=self["gen.pressure_coeff"],
            pressure_ripple=self["gen.pressure_ripple"],
            freq_per_velocity=self["gen.freq_per_velocity"],
            mean_gain=self["gen.mean_gain"],
            step_width=self["gen.step_width"],
            wake_center=self["gen.wake_center"],
        )

    def mesh_spec(self) -> MeshSpec:
        return MeshSpec(n_nodes=self["n_nodes"], seed=self.seed)

    def ladder(self) -> tuple[list[float], tuple[float, ...]]:
        """(velocities, default validation velocities) for the chosen ladder."""
        kind = self["ladder"]
        if kind == "desk":
            return desk_ladder(), DESK_LADDER_VAL
        if kind == "paper":
            return paper_ladder(), (0.1, 0.2, 0.3, 0.5, 0.6)
        if kind == "custom":
            if not self["velocities"]:
                raise ConfigError("ladder = custom requires a velocities list")
            if not self["val_velocities"]:
                raise ConfigError("ladder = custom requires val_velocities")
            return list(self["velocities"]), tuple(self["val_velocities"])
        raise ConfigError(f"unknown ladder {kind!r}")

    def split(self, field_kind: str) -> DatasetSplit:
        velocities, default_val = self.ladder()
        val = tuple(self["val_velocities"]) or default_val
        return make_split(
            velocities,
            field_kind=field_kind,
            n_timesteps=self["n_timesteps"],
            snapshot_interval=self["snapshot_interval"],
            val_velocities=val,
            test_velocities=tuple(self["test_velocities"]),
        )

    def grid(self, scale: int | None = None) -> GridSpec:
        geom = self.geometry()
        return scale_grid(
            geom.extents,
            self["interp.scale"] if scale is None else scale,
            self["grid_nx"],
            self["grid_ny"],
        )

    def interp_spec(self, scale: int | None = None) -> InterpSpec:
        return InterpSpec(
            k=self["interp.k"],
            p=self["interp.p"],
            mask_factor=self["interp.mask_factor"],
            scale=self["interp.scale"] if scale is None else scale,
        )

    def mlp_ae_config(self, input_dim: int) -> MlpAeConfig:
        return MlpAeConfig(
            input_dim=input_dim,
            hidden=tuple(self["mlp_ae.hidden"]),
            latent_dim=self["mlp_ae.latent_dim"],
            train=TrainSpec(
                optimizer="adamw",
                lr=self["mlp_ae.lr"],
                weight_decay=self["mlp_ae.weight_decay"],
                batch=self["mlp_ae.batch"],
                epochs=self["mlp_ae.epochs"],
            ),
        )

    def cae_config(self, input_hw: tuple[int, int]) -> ConvAeConfig:
        return ConvAeConfig(
            input_hw=input_hw,
            channels=tuple(self["cae.channels"]),
            kernel=self["cae.kernel"],
            latent_dim=self["cae.latent_dim"],
            train=TrainSpec(
                optimizer="adamw",
                lr=self["cae.lr"],
                weight_decay=self["cae.weight_decay"],
                batch=self["cae.batch"],
                epochs=self["cae.epochs"],
            ),
        )

    def ldon_config(self, latent_dim: int, multiscale: bool) -> DeepOnetConfig:
        return DeepOnetConfig(
            latent_dim=latent_dim,
            basis=self["ldon.basis"],
            scales=tuple(self["ldon.scales"]) if multiscale else (1.0,),
            branch_layers=self["ldon.branch_layers"],
            branch_width=self["ldon.branch_width"],
            trunk_layers=self["ldon.trunk_layers"],
            trunk_width=self["ldon.trunk_width"],
            train=OperatorTrainSpec(
                optimizer="adam",
                lr=self["ldon.lr"],
                decay_rate=self["ldon.decay_rate"],
                decay_every=self["ldon.decay_every"],
                batch=self["ldon.batch"],
                epochs=self["ldon.epochs"],
                loss="mse",
            ),
        )

    def fno_config(self, out_channels: int, modes: tuple[int, int] | None = None) -> FnoConfig:
        return FnoConfig(
            modes=modes if modes is not None else tuple(self["fno.modes"]),
            width=self["fno.width"],
            depth=self["fno.depth"],
            activation=self["fno.activation"],
            out_channels=out_channels,
            train=OperatorTrainSpec(
                optimizer="adamw",
                lr=self["fno.lr"],
                weight_decay=self["fno.weight_decay"],
                batch=self["fno.batch"],
                epochs=self["fno.epochs"],
                loss="relative_l2",
            ),
        )

    def mscale_fno_config(self, out_channels: int) -> MscaleFnoConfig:
        return MscaleFnoConfig(
            n_subnets=self["mscale_fno.subnets"],
            scales=tuple(self["mscale_fno.scales"]),
            modes=tuple(self["fno.modes"]),
            width=self["mscale_fno.width"],
            depth=self["mscale_fno.depth"],
            activation=self["mscale_fno.activation"],
            out_channels=out_channels,
            train=OperatorTrainSpec(
                optimizer="adamw",
                lr=self["mscale_fno.lr"],
                weight_decay=self["mscale_fno.weight_decay"],
                batch=self["mscale_fno.batch"],
                epochs=self["mscale_fno.epochs"],
                loss="relative_l2",
            ),
        )

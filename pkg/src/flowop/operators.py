"""Surrogate operators: latent DeepONet (single- and multi-scale trunks),
FNO, and the multi-scale FNO combination, with their training loops.

DeepONets act in an autoencoder's latent space: the branch encodes the
initial-field code, one trunk sub-network per scale factor encodes the
scaled normalized time, and per-scale dot products over the basis functions
are summed.  FNO-family models map an initial gridded frame to the full
stack of difference frames in one forward pass.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import (
    Tensor,
    activation,
    exp,
    irfft2,
    loss as loss_fn,
    make_optimizer,
    no_grad,
    rfft2,
    spectral_multiply,
)
from .autodiff.optim import ExponentialDecay
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigError, ShapeError, TrainingDiverged
from .nn import MLP, Dense, apply_pointwise, collect_params, spectral_init
from .rng import substream
from .rom import TrainedAe, TrainHistory

DIVERGENCE_LIMIT = 1e6

MLP_AE_SCALES = (1.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0, 200.0, 300.0, 500.0)
CAE_SCALES = (1.0, 10.0, 20.0, 30.0, 40.0, 50.0, 100.0, 200.0, 300.0)
MSCALE_FNO_SCALES = (1.0, 40.0, 80.0, 100.0, 140.0, 200.0)


@dataclass(frozen=True)
class OperatorTrainSpec:
    optimizer: str = "adam"
    lr: float = 1e-4
    weight_decay: float = 0.0
    decay_rate: float = 0.9
    decay_every: int = 0  # 0 disables the schedule
    batch: int = 8
    epochs: int = 1000
    loss: str = "mse"

    def decay(self) -> ExponentialDecay | None:
        if self.decay_every <= 0:
            return None
        return ExponentialDecay(self.decay_rate, self.decay_every)


@dataclass(frozen=True)
class DeepOnetConfig:
    latent_dim: int = 256
    basis: int = 16
    scales: tuple[float, ...] = (1.0,)
    branch_layers: int = 6
    branch_width: int = 512
    branch_activation: str = "relu"
    trunk_layers: int = 3
    trunk_width: int = 128
    trunk_activation: str = "sin"
    train: OperatorTrainSpec = field(default_factory=OperatorTrainSpec)

    def __post_init__(self):
        if len(set(self.scales)) != len(self.scales) or any(s <= 0 for s in self.scales):
            raise ConfigError(f"scale factors must be positive and unique: {self.scales}")

    @property
    def branch_output(self) -> int:
        return self.latent_dim * self.basis * len(self.scales)


class DeepOnet:
    """Branch-trunk operator over latent codes and normalized time."""

    def __init__(self, config: DeepOnetConfig, seed: int):
        self.config = config
        c = config
        branch_sizes = [c.latent_dim] + [c.branch_width] * (c.branch_layers - 1)
        branch_sizes += [self.config.branch_output]
        self.branch = MLP(substream(seed, "branch"), branch_sizes, c.branch_activation)
        trunk_sizes = [1] + [c.trunk_width] * (c.trunk_layers - 1) + [c.basis]
        self.trunks = [
            MLP(
                substream(seed, "trunk", i),
                trunk_sizes,
                c.trunk_activation,
                out_act=c.trunk_activation,
            )
            for i in range(len(c.scales))
        ]

    def params(self):
        return collect_params(self.branch, *self.trunks)

    def forward(self, codes: Tensor, times: np.ndarray) -> Tensor:
        """[n, latent] codes at [m] normalized times -> [n, m, latent]."""
        c = self.config
        if codes.shape[-1] != c.latent_dim:
            raise ShapeError(
                f"code length {codes.shape[-1]} != latent dim {c.latent_dim}"
            )
        times = np.asarray(times, dtype=np.float64)
        if times.max(initial=0.0) > 1.05:
            warnings.warn(
                f"time {times.max():.3f} is outside the normalized training range "
                "[0, 1]; extrapolating",
                stacklevel=2,
            )
        n = codes.shape[0]
        m = times.shape[0]
        b = self.branch(codes).reshape(n, len(c.scales), c.basis, c.latent_dim)
        out = None
        for s, scale in enumerate(c.scales):
            t_feat = self.trunks[s](Tensor(scale * times[:, None]))  # [m, basis]
            bs = b[:, s].transpose(1, 0, 2).reshape(c.basis, n * c.latent_dim)
            contrib = (t_feat @ bs).reshape(m, n, c.latent_dim).transpose(1, 0, 2)
            out = contrib if out is None else out + contrib
        return out

    def predict(self, codes: np.ndarray, times: np.ndarray) -> np.ndarray:
        with no_grad():
            return self.forward(Tensor(codes), times).data


@dataclass
class LatentDataset:
    """Pre-encoded operator training set (the autoencoder stays frozen)."""

    u0_codes: np.ndarray       # [n_cases, latent]
    targets: np.ndarray        # [n_cases, T-1, latent]
    times: np.ndarray          # [T-1] normalized to (0, 1]
    labels: list[str]


def normalized_times(n_timesteps: int) -> np.ndarray:
    return np.arange(1, n_timesteps) / n_timesteps


def build_latent_dataset(ae: TrainedAe, cases) -> LatentDataset:
    from .fields import to_difference

    u0_codes, targets, labels = [], [], []
    times = None
    for series in cases:
        diff = to_difference(series)
        u0_codes.append(ae.encode(series.values[:1])[0])
        targets.append(ae.encode(diff.values))
        labels.append(f"{series.meta.field_kind}-{series.meta.inlet_velocity}")
        times = normalized_times(series.meta.n_timesteps)
    return LatentDataset(np.array(u0_codes), np.array(targets), times, labels)


def train_deeponet(
    model: DeepOnet,
    data: LatentDataset,
    val_data: LatentDataset,
    seed: int,
    log_every: int = 0,
) -> TrainHistory:
    """Latent-space MSE over all (case, time) pairs; batches are case subsets."""
    spec = model.config.train
    if data.u0_codes.shape[1] != model.config.latent_dim:
        raise ConfigError(
            f"dataset latent dim {data.u0_codes.shape[1]} != "
            f"operator latent dim {model.config.latent_dim}"
        )
    params = model.params()
    opt = make_optimizer(
        spec.optimizer, params, spec.lr,
        weight_decay=spec.weight_decay, decay=spec.decay(),
    )
    shuffle = substream(seed, "don-shuffle")
    history = TrainHistory()
    best_val = np.inf
    best_state = [p.data.copy() for p in params]
    n = data.u0_codes.shape[0]
    val_codes = Tensor(val_data.u0_codes)
    val_targets = Tensor(val_data.targets)
    for epoch in range(spec.epochs):
        opt.set_epoch(epoch)
        order = shuffle.permutation(n)
        total = 0.0
        for lo in range(0, n, spec.batch):
            idx = order[lo : lo + spec.batch]
            pred = model.forward(Tensor(data.u0_codes[idx]), data.times)
            loss_t = loss_fn(pred, Tensor(data.targets[idx]), spec.loss)
            opt.zero_grad()
            loss_t.backward()
            opt.step()
            total += loss_t.item() * len(idx)
        train_loss = total / n
        if not np.isfinite(train_loss) or train_loss > DIVERGENCE_LIMIT:
            raise TrainingDiverged(f"operator loss {train_loss} at epoch {epoch}")
        with no_grad():
            val_loss = loss_fn(
                model.forward(val_codes, val_data.times), val_targets, spec.loss
            ).item()
        history.record(epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_state = [p.data.copy() for p in params]
        if log_every and epoch % log_every == 0:
            print(f"  don epoch {epoch}: train {train_loss:.3e} val {val_loss:.3e}")
    for p, data_arr in zip(params, best_state):
        p.data = data_arr
    return history


def l_deeponet_predict(
    model: DeepOnet, ae: TrainedAe, u0_field: np.ndarray, times: np.ndarray
) -> np.ndarray:
    """encode -> operator -> decode -> add the initial field back."""
    code = ae.encode(u0_field[None])
    latent = model.predict(code, times)[0]
    diffs = ae.decode(latent)
    return diffs + u0_field[None]


# -- FNO family ---------------------------------------------------------------


@dataclass(frozen=True)
class FnoConfig:
    modes: tuple[int, int] = (24, 24)
    width: int = 128
    depth: int = 4
    activation: str = "gelu"
    out_channels: int = 49
    train: OperatorTrainSpec = field(
        default_factory=lambda: OperatorTrainSpec(
            optimizer="adamw", lr=1e-3, weight_decay=1e-4, batch=6, loss="relative_l2"
        )
    )


class Fno:
    """Lift, ``depth`` Fourier layers (pointwise linear + truncated spectral
    mixing), then a pointwise projection to the output frames."""

    def __init__(self, config: FnoConfig, seed: int):
        self.config = config
        c = config
        m1, m2 = c.modes
        self.lift = Dense(substream(seed, "lift"), 1, c.width)
        self.point = [
            Dense(substream(seed, "point", i), c.width, c.width) for i in range(c.depth)
        ]
        self.spectral = [
            spectral_init(substream(seed, "spectral", i), c.width, c.width, m1, m2)
            for i in range(c.depth)
        ]
        self.proj = Dense(substream(seed, "proj"), c.width, c.out_channels)

    def params(self):
        return collect_params(self.lift, *self.point, self.proj) + self.spectral

    def _check_grid(self, h: int, w: int):
        m1, m2 = self.config.modes
        if 2 * m1 > h:
            raise ConfigError(f"m1={m1} needs 2*m1 <= H={h}")
        if m2 > w // 2 + 1:
            raise ConfigError(f"m2={m2} exceeds W//2+1={w // 2 + 1}")

    def forward(self, x: Tensor) -> Tensor:
        """[b, 1, H, W] initial frames -> [b, out_channels, H, W]."""
        if x.ndim != 4 or x.shape[1] != 1:
            raise ShapeError(f"fno expects [b, 1, H, W], got {x.shape}")
        h, w = x.shape[2], x.shape[3]
        self._check_grid(h, w)
        m1, m2 = self.config.modes
        v = apply_pointwise(self.lift, x)
        for point, spec_w in zip(self.point, self.spectral):
            local = apply_pointwise(point, v)
            global_ = irfft2(spectral_multiply(rfft2(v), spec_w, m1, m2), width=w)
            v = activation(local + global_, self.config.activation)
        return apply_pointwise(self.proj, v)

    def predict(self, x: np.ndarray) -> np.ndarray:
        with no_grad():
            return self.forward(Tensor(x)).data


@dataclass(frozen=True)
class MscaleFnoConfig:
    n_subnets: int = 6
    scales: tuple[float, ...] = MSCALE_FNO_SCALES
    modes: tuple[int, int] = (24, 24)
    width: int = 16
    depth: int = 4
    activation: str = "sin"
    out_channels: int = 49
    train: OperatorTrainSpec = field(
        default_factory=lambda: OperatorTrainSpec(
            optimizer="adamw", lr=1e-3, weight_decay=1e-4, batch=6, loss="relative_l2"
        )
    )

    def __post_init__(self):
        if len(self.scales) != self.n_subnets:
            raise ConfigError(
                f"{self.n_subnets} sub-networks need {self.n_subnets} scales, "
                f"got {len(self.scales)}"
            )
        if any(s <= 0 for s in self.scales):
            raise ConfigError(f"scales must be positive: {self.scales}")

    def subnet_config(self) -> FnoConfig:
        return FnoConfig(
            modes=self.modes,
            width=self.width,
            depth=self.depth,
            activation=self.activation,
            out_channels=self.out_channels,
            train=self.train,
        )


class MscaleFno:
    """Weighted sum of FNO sub-networks fed input copies scaled by c_n.

    Input scales are learnable in log space (stays positive); combination
    weights are learnable in linear space.
    """

    def __init__(self, config: MscaleFnoConfig, seed: int):
        self.config = config
        sub_cfg = config.subnet_config()
        self.subnets = [
            Fno(sub_cfg, substream(seed, "subnet", i).integers(2**31))
            for i in range(config.n_subnets)
        ]
        self.log_scales = Tensor(np.log(np.array(config.scales)), requires_grad=True)
        self.weights = Tensor(
            np.full(config.n_subnets, 1.0 / config.n_subnets), requires_grad=True
        )

    def params(self):
        out = [self.log_scales, self.weights]
        for net in self.subnets:
            out.extend(net.params())
        return out

    def forward(self, x: Tensor) -> Tensor:
        scales = exp(self.log_scales)
        out = None
        for i, net in enumerate(self.subnets):
            contrib = self.weights[i : i + 1].reshape(1, 1, 1, 1) * net.forward(
                scales[i : i + 1].reshape(1, 1, 1, 1) * x
            )
            out = contrib if out is None else out + contrib
        return out

    def predict(self, x: np.ndarray) -> np.ndarray:
        with no_grad():
            return self.forward(Tensor(x)).data


def train_grid_operator(
    model,
    train_inputs: np.ndarray,
    train_targets: np.ndarray,
    val_inputs: np.ndarray,
    val_targets: np.ndarray,
    seed: int,
    log_every: int = 0,
) -> TrainHistory:
    """Shared loop for FNO-family models on [n, 1, H, W] -> [n, o, H, W]."""
    spec = model.config.train
    params = model.params()
    opt = make_optimizer(
        spec.optimizer, params, spec.lr,
        weight_decay=spec.weight_decay, decay=spec.decay(),
    )
    shuffle = substream(seed, "fno-shuffle")
    history = TrainHistory()
    best_val = np.inf
    best_state = [p.data.copy() for p in params]
    n = train_inputs.shape[0]
    for epoch in range(spec.epochs):
        opt.set_epoch(epoch)
        order = shuffle.permutation(n)
        total = 0.0
        for lo in range(0, n, spec.batch):
            idx = order[lo : lo + spec.batch]
            pred = model.forward(Tensor(train_inputs[idx]))
            loss_t = loss_fn(pred, Tensor(train_targets[idx]), spec.loss)
            opt.zero_grad()
            loss_t.backward()
            opt.step()
            total += loss_t.item() * len(idx)
        train_loss = total / n
        if not np.isfinite(train_loss) or train_loss > DIVERGENCE_LIMIT:
            raise TrainingDiverged(f"operator loss {train_loss} at epoch {epoch}")
        with no_grad():
            val_loss = loss_fn(
                model.forward(Tensor(val_inputs)), Tensor(val_targets), spec.loss
            ).item()
        history.record(epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_state = [p.data.copy() for p in params]
        if log_every and epoch % log_every == 0:
            print(f"  fno epoch {epoch}: train {train_loss:.3e} val {val_loss:.3e}")
    for p, data_arr in zip(params, best_state):
        p.data = data_arr
    return history


# -- persistence ---------------------------------------------------------------


def _train_spec_from(cfg: dict) -> OperatorTrainSpec:
    return OperatorTrainSpec(**cfg)


def save_operator(path, model, kind: str):
    cfg = asdict(model.config)
    arrays = {f"p{i}": p.data for i, p in enumerate(model.params())}
    save_checkpoint(path, kind, cfg, arrays)


def load_operator(path):
    kind, cfg, arrays = load_checkpoint(path)
    cfg["train"] = _train_spec_from(cfg["train"])
    if kind in ("ldon", "ms-ldon"):
        cfg["scales"] = tuple(cfg["scales"])
        model = DeepOnet(DeepOnetConfig(**cfg), seed=0)
    elif kind == "fno":
        cfg["modes"] = tuple(cfg["modes"])
        model = Fno(FnoConfig(**cfg), seed=0)
    elif kind == "mscale-fno":
        cfg["modes"] = tuple(cfg["modes"])
        cfg["scales"] = tuple(cfg["scales"])
        model = MscaleFno(MscaleFnoConfig(**cfg), seed=0)
    else:
        raise ShapeError(f"not an operator checkpoint: {kind!r}")
    for i, p in enumerate(model.params()):
        p.data = arrays[f"p{i}"]
    return model, kind

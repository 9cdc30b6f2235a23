"""Reduced-order models: MLP autoencoder for scattered fields and a
convolutional autoencoder for gridded fields.

Both train on the mixed snapshot set {initial fields} + {difference
frames}, standardized with scalar statistics of the training snapshots
(inverted after decode).  Training keeps the best-validation checkpoint.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import Tensor, make_optimizer, no_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigError, ShapeError, TrainingDiverged
from .fields import Series
from .metrics import SeriesMetric
from .nn import MLP, Conv2d, ConvTranspose2d, collect_params
from .rng import substream


@dataclass(frozen=True)
class TrainSpec:
    optimizer: str = "adamw"
    lr: float = 1e-4
    weight_decay: float = 1e-4
    batch: int = 64
    epochs: int = 2000
    loss: str = "mse"


@dataclass(frozen=True)
class MlpAeConfig:
    input_dim: int
    hidden: tuple[int, ...] = (4096, 1024, 512)
    latent_dim: int = 256
    activation: str = "relu"
    train: TrainSpec = field(default_factory=TrainSpec)

    def __post_init__(self):
        # non-increasing funnel; equality allowed so identity capacity works
        widths = (self.input_dim, *self.hidden, self.latent_dim)
        if any(a < b for a, b in zip(widths, widths[1:])):
            raise ConfigError(f"encoder widths must not increase, got {widths}")


@dataclass(frozen=True)
class ConvAeConfig:
    input_hw: tuple[int, int]
    channels: tuple[int, ...] = (16, 32, 64, 128)
    kernel: int = 3
    latent_dim: int = 256
    activation: str = "relu"
    train: TrainSpec = field(default_factory=TrainSpec)

    def __post_init__(self):
        h, w = self.input_hw
        if h // 2 ** len(self.channels) < 1 or w // 2 ** len(self.channels) < 1:
            raise ConfigError(
                f"{len(self.channels)} stride-2 blocks collapse a {self.input_hw} input"
            )


@dataclass(frozen=True)
class Standardizer:
    mean: float
    std: float

    @classmethod
    def fit(cls, values: np.ndarray, keep: np.ndarray | None = None) -> "Standardizer":
        sample = values[..., keep] if keep is not None else values
        std = float(sample.std())
        if std == 0.0:
            std = 1.0
        return cls(float(sample.mean()), std)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return x * self.std + self.mean


class MlpAutoencoder:
    def __init__(self, config: MlpAeConfig, seed: int):
        self.config = config
        rng = substream(seed, "mlp-ae")
        enc_sizes = [config.input_dim, *config.hidden, config.latent_dim]
        dec_sizes = enc_sizes[::-1]
        self.encoder = MLP(rng, enc_sizes, config.activation)
        self.decoder = MLP(rng, dec_sizes, config.activation)

    def encode(self, x: Tensor) -> Tensor:
        return self.encoder(x)

    def decode(self, z: Tensor) -> Tensor:
        return self.decoder(z)

    def __call__(self, x: Tensor) -> Tensor:
        return self.decode(self.encode(x))

    def params(self):
        return collect_params(self.encoder, self.decoder)


class ConvAutoencoder:
    """Stride-2 conv stack + dense head; decoder mirrors with transposed convs.

    Per-layer output paddings are recorded so odd intermediate sizes invert
    exactly.
    """

    def __init__(self, config: ConvAeConfig, seed: int):
        self.config = config
        rng = substream(seed, "conv-ae")
        k = config.kernel
        pad = k // 2
        chans = (1, *config.channels)
        sizes = [config.input_hw]
        for _ in config.channels:
            h, w = sizes[-1]
            sizes.append(((h + 2 * pad - k) // 2 + 1, (w + 2 * pad - k) // 2 + 1))
        self.sizes = sizes
        self.enc_convs = [
            Conv2d(rng, ci, co, k, stride=2, padding=pad)
            for ci, co in zip(chans[:-1], chans[1:])
        ]
        self.dec_convs = []
        for i in reversed(range(len(config.channels))):
            target, cur = sizes[i], sizes[i + 1]
            opad = (target[0] - (2 * cur[0] - 1), target[1] - (2 * cur[1] - 1))
            self.dec_convs.append(
                ConvTranspose2d(
                    rng, chans[i + 1], chans[i], k, stride=2, padding=pad,
                    output_padding=opad,
                )
            )
        deep_h, deep_w = sizes[-1]
        self.flat_dim = config.channels[-1] * deep_h * deep_w
        head_rng = substream(seed, "conv-ae", "head")
        self.to_latent = MLP(head_rng, [self.flat_dim, config.latent_dim], "identity")
        self.from_latent = MLP(head_rng, [config.latent_dim, self.flat_dim], "identity")

    def encode(self, x: Tensor) -> Tensor:
        from .autodiff import activation

        n = x.shape[0]
        h = x.reshape(n, 1, *self.config.input_hw)
        for conv in self.enc_convs:
            h = activation(conv(h), self.config.activation)
        return self.to_latent(h.reshape(n, self.flat_dim))

    def decode(self, z: Tensor) -> Tensor:
        from .autodiff import activation

        n = z.shape[0]
        deep_h, deep_w = self.sizes[-1]
        h = self.from_latent(z).reshape(n, self.config.channels[-1], deep_h, deep_w)
        for conv in self.dec_convs:
            h = conv(activation(h, self.config.activation))
        return h.reshape(n, *self.config.input_hw)

    def __call__(self, x: Tensor) -> Tensor:
        return self.decode(self.encode(x))

    def params(self):
        return collect_params(
            *self.enc_convs, self.to_latent, self.from_latent, *self.dec_convs
        )


class TrainedAe:
    """Autoencoder + its standardizer (+ solid mask for gridded fields)."""

    def __init__(self, model, scaler: Standardizer, solid_mask: np.ndarray | None = None):
        self.model = model
        self.scaler = scaler
        self.solid_mask = solid_mask

    @property
    def latent_dim(self) -> int:
        return self.model.config.latent_dim

    def _prepare(self, fields: np.ndarray) -> np.ndarray:
        x = self.scaler.forward(fields)
        if self.solid_mask is not None:
            x = x.copy()
            x[..., self.solid_mask] = 0.0
        return x

    def encode(self, fields: np.ndarray) -> np.ndarray:
        with no_grad():
            return self.model.encode(Tensor(self._prepare(fields))).data

    def decode(self, codes: np.ndarray) -> np.ndarray:
        with no_grad():
            raw = self.model.decode(Tensor(codes)).data
        out = self.scaler.inverse(raw)
        if self.solid_mask is not None:
            out[..., self.solid_mask] = 0.0
        return out

    def reconstruct(self, fields: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(fields))


@dataclass
class TrainHistory:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    def record(self, epoch: int, train: float, val: float):
        self.epochs.append(epoch)
        self.train_loss.append(train)
        self.val_loss.append(val)

    def best_curve(self) -> np.ndarray:
        """Running minimum of the validation loss (checkpointed model curve)."""
        return np.minimum.accumulate(np.array(self.val_loss))

    def write_csv(self, path):
        from pathlib import Path

        lines = ["epoch,train_loss,val_loss"]
        lines += [
            f"{e},{t!r},{v!r}"
            for e, t, v in zip(self.epochs, self.train_loss, self.val_loss)
        ]
        Path(path).write_text("\n".join(lines) + "\n")


def _masked_mse(pred: Tensor, ref: Tensor, keep: Tensor | None, n_keep: float) -> Tensor:
    d = pred - ref
    if keep is not None:
        d = d * keep
    return (d * d).sum() * (1.0 / (d.shape[0] * n_keep))


def train_ae(
    model,
    train_fields: np.ndarray,
    val_fields: np.ndarray,
    scaler: Standardizer,
    seed: int,
    solid_mask: np.ndarray | None = None,
    log_every: int = 0,
) -> tuple[TrainedAe, TrainHistory]:
    """Minimize masked reconstruction MSE; return the best-val checkpoint."""
    spec = model.config.train
    wrapped = TrainedAe(model, scaler, solid_mask)
    x_train = wrapped._prepare(train_fields)
    x_val = wrapped._prepare(val_fields)
    keep = None
    n_keep = float(np.prod(x_train.shape[1:]))
    if solid_mask is not None:
        keep = Tensor((~solid_mask).astype(np.float64))
        n_keep = float((~solid_mask).sum())
    params = model.params()
    opt = make_optimizer(
        spec.optimizer, params, spec.lr, weight_decay=spec.weight_decay
    )
    shuffle = substream(seed, "ae-shuffle")
    history = TrainHistory()
    best_val = np.inf
    best_state = [p.data.copy() for p in params]
    n = x_train.shape[0]
    val_tensor = Tensor(x_val)
    for epoch in range(spec.epochs):
        order = shuffle.permutation(n)
        total = 0.0
        for lo in range(0, n, spec.batch):
            idx = order[lo : lo + spec.batch]
            batch = Tensor(x_train[idx])
            out = model(batch)
            loss_t = _masked_mse(out, batch, keep, n_keep)
            opt.zero_grad()
            loss_t.backward()
            opt.step()
            total += loss_t.item() * len(idx)
        train_loss = total / n
        if not np.isfinite(train_loss):
            raise TrainingDiverged(f"AE loss became {train_loss} at epoch {epoch}")
        with no_grad():
            val_loss = _masked_mse(model(val_tensor), val_tensor, keep, n_keep).item()
        history.record(epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_state = [p.data.copy() for p in params]
        if log_every and epoch % log_every == 0:
            print(f"  ae epoch {epoch}: train {train_loss:.3e} val {val_loss:.3e}")
    for p, data in zip(params, best_state):
        p.data = data
    return wrapped, history


def reconstruction_report(ae: TrainedAe, series: Series, dump_steps=()) -> tuple[
    SeriesMetric, dict[int, tuple[np.ndarray, np.ndarray]]
]:
    """Per-frame relative L2 of decode(encode(.)) plus optional field dumps."""
    fields = series.values
    recon = ae.reconstruct(fields)
    flat_ref = fields.reshape(fields.shape[0], -1)
    flat_rec = recon.reshape(recon.shape[0], -1)
    if ae.solid_mask is not None:
        keep = ~ae.solid_mask.ravel()
        flat_ref = flat_ref[:, keep]
        flat_rec = flat_rec[:, keep]
    norms = np.linalg.norm(flat_ref, axis=1)
    norms[norms == 0.0] = 1.0
    per = np.linalg.norm(flat_rec - flat_ref, axis=1) / norms
    dumps = {
        int(t): (fields[t].copy(), recon[t].copy())
        for t in dump_steps
        if 0 <= int(t) < fields.shape[0]
    }
    return SeriesMetric(per, float(per.mean())), dumps


# -- persistence -------------------------------------------------------------


def _flat_params(model) -> dict[str, np.ndarray]:
    return {f"p{i}": p.data for i, p in enumerate(model.params())}


def save_ae(path, ae: TrainedAe, kind: str):
    cfg = asdict(ae.model.config)
    cfg["scaler"] = [ae.scaler.mean, ae.scaler.std]
    arrays = _flat_params(ae.model)
    if ae.solid_mask is not None:
        arrays["solid_mask"] = ae.solid_mask.astype(np.float64)
    save_checkpoint(path, kind, cfg, arrays)


def load_ae(path) -> tuple[TrainedAe, str]:
    kind, cfg, arrays = load_checkpoint(path)
    mean, std = cfg.pop("scaler")
    train = TrainSpec(**cfg.pop("train"))
    mask = arrays.pop("solid_mask", None)
    if mask is not None:
        mask = mask.astype(bool)
    if kind == "mlp-ae":
        cfg["hidden"] = tuple(cfg["hidden"])
        model = MlpAutoencoder(MlpAeConfig(train=train, **cfg), seed=0)
    elif kind == "cae":
        cfg["input_hw"] = tuple(cfg["input_hw"])
        cfg["channels"] = tuple(cfg["channels"])
        model = ConvAutoencoder(ConvAeConfig(train=train, **cfg), seed=0)
    else:
        raise ShapeError(f"not an autoencoder checkpoint: {kind!r}")
    for i, p in enumerate(model.params()):
        p.data = arrays[f"p{i}"]
    return TrainedAe(model, Standardizer(mean, std), mask), kind

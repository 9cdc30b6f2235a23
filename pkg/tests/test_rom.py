"""Autoencoder mechanics: memorization, capacity, determinism, persistence."""

import numpy as np
import pytest

from flowop.errors import ConfigError, TrainingDiverged
from flowop.fields import CaseMeta, UnstructuredSeries
from flowop.rom import (
    ConvAeConfig,
    ConvAutoencoder,
    MlpAeConfig,
    MlpAutoencoder,
    Standardizer,
    TrainSpec,
    TrainedAe,
    load_ae,
    reconstruction_report,
    save_ae,
    train_ae,
)

rng = np.random.default_rng(41)


def quick_spec(**kw):
    base = dict(optimizer="adam", lr=1e-2, weight_decay=0.0, batch=16, epochs=200)
    base.update(kw)
    return TrainSpec(**base)


def train_tiny_mlp(fields, epochs=200, lr=1e-2, latent=4, hidden=(8,)):
    cfg = MlpAeConfig(
        input_dim=fields.shape[1],
        hidden=hidden,
        latent_dim=latent,
        train=quick_spec(epochs=epochs, lr=lr),
    )
    model = MlpAutoencoder(cfg, seed=5)
    scaler = Standardizer.fit(fields)
    return train_ae(model, fields, fields[:4], scaler, seed=5)


class TestConfigs:
    def test_default_latent_dim(self):
        assert MlpAeConfig(input_dim=8192).latent_dim == 256
        assert ConvAeConfig(input_hw=(282, 756)).latent_dim == 256

    def test_increasing_widths_rejected(self):
        with pytest.raises(ConfigError):
            MlpAeConfig(input_dim=10, hidden=(20,), latent_dim=4)

    def test_too_deep_conv_stack_rejected(self):
        with pytest.raises(ConfigError):
            ConvAeConfig(input_hw=(8, 8), channels=(4, 8, 16, 32))


class TestTraining:
    def test_constant_dataset_memorized(self):
        snap = rng.normal(size=12)
        fields = np.tile(snap, (32, 1))
        ae, history = train_tiny_mlp(fields)
        assert history.train_loss[-1] < 1e-8
        metric, _ = reconstruction_report(
            ae,
            UnstructuredSeries(
                CaseMeta(0.4, "velocity", 3, 0.1),
                np.column_stack([np.linspace(0, 1, 12), np.zeros(12)]),
                np.tile(snap, (3, 1)),
            ),
        )
        assert metric.mean < 1e-3

    def test_identity_capacity_linear(self):
        fields = rng.normal(size=(64, 6))
        cfg = MlpAeConfig(
            input_dim=6,
            hidden=(),
            latent_dim=6,
            activation="identity",
            train=quick_spec(epochs=800, lr=3e-2, batch=64),
        )
        model = MlpAutoencoder(cfg, seed=1)
        ae, history = train_ae(model, fields, fields, Standardizer.fit(fields), seed=1)
        recon = ae.reconstruct(fields)
        rel = np.linalg.norm(recon - fields) / np.linalg.norm(fields)
        assert rel < 1e-3

    def test_best_checkpoint_curve_non_increasing(self):
        fields = rng.normal(size=(24, 10))
        _, history = train_tiny_mlp(fields, epochs=50)
        best = history.best_curve()
        assert np.all(np.diff(best) <= 0)

    def test_nan_loss_aborts(self):
        fields = rng.normal(size=(16, 8))
        fields[3, 2] = np.nan
        cfg = MlpAeConfig(
            input_dim=8, hidden=(6,), latent_dim=4, train=quick_spec(epochs=200)
        )
        model = MlpAutoencoder(cfg, seed=2)
        with pytest.raises(TrainingDiverged, match="epoch"):
            train_ae(model, fields, fields, Standardizer(0.0, 1.0), seed=2)

    def test_training_determinism(self):
        fields = rng.normal(size=(20, 8))

        def run():
            cfg = MlpAeConfig(
                input_dim=8, hidden=(6,), latent_dim=4, train=quick_spec(epochs=30)
            )
            model = MlpAutoencoder(cfg, seed=9)
            _, history = train_ae(model, fields, fields, Standardizer.fit(fields), seed=9)
            return history.train_loss[-1]

        assert run() == run()


class TestEncodeDecode:
    def test_identical_snapshots_identical_codes(self):
        fields = rng.normal(size=(8, 10))
        ae, _ = train_tiny_mlp(fields, epochs=5)
        snap = fields[:1]
        assert np.array_equal(ae.encode(snap), ae.encode(snap.copy()))

    def test_code_length_matches_config(self):
        cfg = MlpAeConfig(input_dim=500, hidden=(400,), latent_dim=256)
        ae = TrainedAe(MlpAutoencoder(cfg, seed=3), Standardizer(0.0, 1.0))
        assert ae.encode(rng.normal(size=(2, 500))).shape == (2, 256)

    def test_encoder_lipschitz_sane(self):
        fields = rng.normal(size=(32, 12)) + 1.0
        ae, _ = train_tiny_mlp(fields, epochs=100)
        x = fields[:1]
        delta = rng.normal(size=x.shape)
        delta *= 1e-6 * np.linalg.norm(x) / np.linalg.norm(delta)
        c0, c1 = ae.encode(x), ae.encode(x + delta)
        rel_out = np.linalg.norm(c1 - c0) / max(np.linalg.norm(c0), 1e-12)
        assert rel_out < 1e-3  # 1e-6 input perturbation stays < 1e3x amplified

    def test_conv_ae_round_trip_shapes(self):
        cfg = ConvAeConfig(
            input_hw=(12, 20), channels=(4, 8), latent_dim=16, train=quick_spec()
        )
        model = ConvAutoencoder(cfg, seed=7)
        ae = TrainedAe(model, Standardizer(0.0, 1.0))
        fields = rng.normal(size=(3, 12, 20))
        assert ae.reconstruct(fields).shape == (3, 12, 20)

    def test_conv_ae_odd_dims_invert_exactly(self):
        cfg = ConvAeConfig(
            input_hw=(13, 11), channels=(4, 8), latent_dim=8, train=quick_spec()
        )
        model = ConvAutoencoder(cfg, seed=7)
        fields = rng.normal(size=(2, 13, 11))
        ae = TrainedAe(model, Standardizer(0.0, 1.0))
        assert ae.reconstruct(fields).shape == (2, 13, 11)

    def test_masked_cells_stay_zero_after_decode(self):
        mask = np.zeros((12, 20), dtype=bool)
        mask[3:5, 4:9] = True
        cfg = ConvAeConfig(
            input_hw=(12, 20), channels=(4, 8), latent_dim=16, train=quick_spec()
        )
        ae = TrainedAe(ConvAutoencoder(cfg, seed=7), Standardizer(0.0, 1.0), mask)
        out = ae.decode(rng.normal(size=(2, 16)))
        assert np.all(out[:, mask] == 0.0)


class TestReport:
    def test_row_count_and_cross_check(self):
        fields = rng.normal(size=(10, 8)) + 2.0
        ae, _ = train_tiny_mlp(fields, epochs=50)
        series = UnstructuredSeries(
            CaseMeta(0.4, "velocity", 10, 0.1),
            np.column_stack([np.linspace(0, 1, 8), np.zeros(8)]),
            fields,
        )
        metric, dumps = reconstruction_report(ae, series, dump_steps=(0, 5, 99))
        assert metric.per_timestep.shape == (10,)
        assert set(dumps) == {0, 5}
        recon = ae.reconstruct(fields)
        expected = np.linalg.norm(recon[3] - fields[3]) / np.linalg.norm(fields[3])
        assert metric.per_timestep[3] == pytest.approx(expected)


class TestPersistence:
    def test_mlp_round_trip(self, tmp_path):
        fields = rng.normal(size=(16, 10))
        ae, _ = train_tiny_mlp(fields, epochs=10)
        path = tmp_path / "ae.nosg"
        save_ae(path, ae, "mlp-ae")
        loaded, kind = load_ae(path)
        assert kind == "mlp-ae"
        assert np.array_equal(loaded.encode(fields), ae.encode(fields))

    def test_cae_round_trip(self, tmp_path):
        mask = np.zeros((12, 20), dtype=bool)
        mask[0, 0] = True
        cfg = ConvAeConfig(
            input_hw=(12, 20), channels=(4, 8), latent_dim=16, train=quick_spec()
        )
        ae = TrainedAe(ConvAutoencoder(cfg, seed=7), Standardizer(1.5, 2.0), mask)
        path = tmp_path / "cae.nosg"
        save_ae(path, ae, "cae")
        loaded, kind = load_ae(path)
        assert kind == "cae"
        fields = rng.normal(size=(2, 12, 20))
        assert np.array_equal(loaded.encode(fields), ae.encode(fields))
        assert np.array_equal(loaded.solid_mask, mask)

"""Convolutions and spectral ops: hand cases, round trips, gradient checks."""

import numpy as np
import pytest

from flowop.autodiff import (
    Tensor,
    abs2,
    conv2d,
    conv_transpose2d,
    irfft2,
    rfft2,
    spectral_multiply,
)
from flowop.errors import ConfigError, ShapeError

from gradcheck import check_gradients

rng = np.random.default_rng(11)


class TestConv2d:
    def test_scalar_kernel_doubles(self):
        x = Tensor(rng.normal(size=(1, 1, 3, 3)))
        k = Tensor(np.full((1, 1, 1, 1), 2.0))
        out = conv2d(x, k)
        assert np.allclose(out.data, 2 * x.data)

    def test_ones_count(self):
        x = Tensor(np.ones((1, 1, 3, 3)))
        k = Tensor(np.ones((1, 1, 2, 2)))
        out = conv2d(x, k)
        assert out.shape == (1, 1, 2, 2)
        assert np.allclose(out.data, 4.0)

    def test_bad_geometry(self):
        with pytest.raises(ShapeError):
            conv2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 5, 5))))
        with pytest.raises(ShapeError):
            conv2d(Tensor(np.ones((1, 2, 4, 4))), Tensor(np.ones((1, 1, 3, 3))))

    def test_kernel_gradient_4x4(self):
        x = rng.normal(size=(1, 1, 4, 4))
        k = rng.normal(size=(1, 1, 3, 3))
        check_gradients(
            lambda ts: (conv2d(ts[0], ts[1]) ** 2).sum(), [x, k], rtol=1e-5
        )

    @pytest.mark.parametrize("stride,padding", [(1, 0), (2, 1), ((2, 1), (1, 0))])
    def test_gradients_strided_padded(self, stride, padding):
        x = rng.normal(size=(2, 2, 5, 6))
        k = rng.normal(size=(3, 2, 3, 3))
        check_gradients(
            lambda ts: (conv2d(ts[0], ts[1], stride, padding) ** 2).sum(),
            [x, k],
        )


class TestConvTranspose2d:
    def test_adjoint_of_conv(self):
        # <conv(x), y> == <x, conv_T(y)> for matching geometry
        x = rng.normal(size=(1, 2, 6, 7))
        k = rng.normal(size=(3, 2, 3, 3))
        y = rng.normal(size=(1, 3, 3, 4))
        # conv kernel [co, ci, .] reads as transpose-conv kernel [ci_t, co_t, .]
        fwd = conv2d(Tensor(x), Tensor(k), stride=2, padding=1).data
        back = conv_transpose2d(
            Tensor(y), Tensor(k), stride=2, padding=1, output_padding=(1, 0)
        ).data
        assert back.shape == x.shape
        assert np.allclose((fwd * y).sum(), (x * back).sum())

    def test_doubles_spatial_dims(self):
        x = Tensor(rng.normal(size=(1, 4, 5, 8)))
        k = Tensor(rng.normal(size=(4, 2, 3, 3)))
        out = conv_transpose2d(x, k, stride=2, padding=1, output_padding=1)
        assert out.shape == (1, 2, 10, 16)

    def test_gradients(self):
        x = rng.normal(size=(1, 2, 3, 4))
        k = rng.normal(size=(2, 3, 3, 3))
        check_gradients(
            lambda ts: (
                conv_transpose2d(ts[0], ts[1], 2, 1, output_padding=1) ** 2
            ).sum(),
            [x, k],
        )

    def test_output_padding_bound(self):
        with pytest.raises(ShapeError):
            conv_transpose2d(
                Tensor(np.ones((1, 1, 3, 3))), Tensor(np.ones((1, 1, 3, 3))),
                stride=2, output_padding=2,
            )


class TestRfft2:
    def test_constant_field_dc_only(self):
        out = rfft2(Tensor(np.full((4, 4), 5.0)))
        assert out.data[0, 0] == pytest.approx(80.0)
        rest = out.data.copy()
        rest[0, 0] = 0.0
        assert np.abs(rest).max() < 1e-12

    def test_round_trip(self):
        x = rng.normal(size=(8, 8))
        back = irfft2(rfft2(Tensor(x)))
        assert np.abs(back.data - x).max() < 1e-12

    @pytest.mark.parametrize("shape", [(4, 4), (6, 8), (2, 3, 4, 6), (5, 4)])
    def test_round_trip_shapes(self, shape):
        x = rng.normal(size=shape)
        back = irfft2(rfft2(Tensor(x)), width=shape[-1])
        assert np.abs(back.data - x).max() < 1e-12

    def test_power_gradient(self):
        x = rng.normal(size=(4, 6))
        check_gradients(lambda ts: abs2(rfft2(ts[0])).sum(), [x], rtol=1e-5)

    def test_irfft2_gradient(self):
        y = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        check_gradients(lambda ts: (irfft2(ts[0]) ** 2).sum(), [y], rtol=1e-5)

    def test_linearity_chain_gradient(self):
        x = rng.normal(size=(2, 1, 4, 6))
        w = rng.normal(size=(1, 1, 4, 4)) + 1j * rng.normal(size=(1, 1, 4, 4))
        check_gradients(
            lambda ts: (
                irfft2(spectral_multiply(rfft2(ts[0]), ts[1], 2, 4)) ** 2
            ).sum(),
            [x, w],
        )


class TestSpectralMultiply:
    def test_identity_full_modes(self):
        x = rng.normal(size=(1, 2, 4, 8))
        v = rfft2(Tensor(x))
        eye = np.zeros((2, 2, 4, 5), dtype=complex)
        eye[0, 0] = 1.0
        eye[1, 1] = 1.0
        out = spectral_multiply(v, Tensor(eye), 2, 5)
        assert np.abs(out.data - v.data).max() < 1e-10

    def test_pure_retained_mode_scaled(self):
        h, w = 8, 8
        grid_y, grid_x = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        field = np.cos(2 * np.pi * (3 * grid_y / h + 2 * grid_x / w))
        v = rfft2(Tensor(field[None, None]))
        m1, m2 = 4, 4
        r = np.zeros((1, 1, 2 * m1, m2), dtype=complex)
        r[0, 0] = 2.0
        out = spectral_multiply(v, Tensor(r), m1, m2)
        assert np.abs(out.data - 2.0 * v.data).max() < 1e-9

    def test_mode_outside_blocks_truncated(self):
        h, w = 12, 8
        m1 = 3
        grid_y, grid_x = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
        field = np.cos(2 * np.pi * (m1 + 1) * grid_y / h)
        v = rfft2(Tensor(field[None, None]))
        r = np.ones((1, 1, 2 * m1, 5), dtype=complex)
        out = spectral_multiply(v, Tensor(r), m1, 5)
        assert np.abs(out.data).max() < 1e-9

    def test_mode_counts_validated(self):
        v = rfft2(Tensor(np.ones((1, 1, 4, 8))))
        with pytest.raises(ConfigError):
            spectral_multiply(v, Tensor(np.ones((1, 1, 6, 5), dtype=complex)), 3, 5)
        with pytest.raises(ConfigError):
            spectral_multiply(v, Tensor(np.ones((1, 1, 4, 6), dtype=complex)), 2, 6)

    def test_gradients(self):
        v = rng.normal(size=(2, 2, 4, 5)) + 1j * rng.normal(size=(2, 2, 4, 5))
        r = rng.normal(size=(2, 3, 4, 3)) + 1j * rng.normal(size=(2, 3, 4, 3))
        check_gradients(
            lambda ts: abs2(spectral_multiply(ts[0], ts[1], 2, 3)).sum(), [v, r]
        )

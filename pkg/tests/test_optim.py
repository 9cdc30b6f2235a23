"""Adam/AdamW update rules and the exponential decay schedule."""

import numpy as np
import pytest

from flowop.autodiff import Adam, ExponentialDecay, Tensor, adamw, make_optimizer
from flowop.errors import GradientError


def test_zero_gradient_adam_leaves_params():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    opt = Adam([p], lr=0.1)
    p.grad = np.zeros(2)
    opt.step()
    assert np.array_equal(p.data, [1.0, -2.0])


def test_zero_gradient_adamw_shrinks_by_lr_wd():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    opt = adamw([p], lr=0.1, weight_decay=0.5)
    p.grad = np.zeros(2)
    opt.step()
    assert np.allclose(p.data, np.array([1.0, -2.0]) * (1 - 0.1 * 0.5))


def test_first_step_closed_form():
    # bias-corrected first step with g=1 moves the scalar by ~lr
    p = Tensor(np.array([0.0]), requires_grad=True)
    lr, eps = 1e-3, 1e-8
    opt = Adam([p], lr=lr, eps=eps)
    p.grad = np.array([1.0])
    opt.step()
    expected = -lr * 1.0 / (1.0 + eps)
    assert p.data[0] == pytest.approx(expected, rel=1e-12)


def test_missing_gradient_raises():
    p = Tensor(np.array([0.0]), requires_grad=True)
    opt = Adam([p])
    with pytest.raises(GradientError):
        opt.step()


def test_exponential_decay_halves_at_interval():
    sched = ExponentialDecay(rate=0.5, every=100)
    opt = Adam([Tensor(np.zeros(1), requires_grad=True)], lr=1.0, decay=sched)
    opt.set_epoch(99)
    assert opt.lr == 1.0
    opt.set_epoch(100)
    assert opt.lr == 0.5
    opt.set_epoch(250)
    assert opt.lr == 0.25


def test_moments_shape_match_and_step_counter():
    p = Tensor(np.zeros((3, 2)), requires_grad=True)
    opt = make_optimizer("adamw", [p], lr=1e-3, weight_decay=1e-4)
    for i in range(3):
        p.grad = np.ones((3, 2))
        opt.step()
    assert opt.step_count == 3
    assert opt._m[0].shape == p.shape
    assert opt._v[0].shape == p.shape


def test_complex_parameter_update_is_finite_and_descends():
    z = Tensor(np.array([1.0 + 1.0j]), requires_grad=True)
    opt = Adam([z], lr=0.01)
    # minimize |z|^2: gradient is 2z
    for _ in range(50):
        z.grad = 2 * z.data
        opt.step()
    assert np.abs(z.data[0]) < np.abs(1 + 1j)
    assert np.isfinite(z.data[0])

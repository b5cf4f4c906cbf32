import numpy as np
import pytest

from unmixlab.autodiff import Tensor
from unmixlab.core import DimensionError
from unmixlab.optim import Adam


def make_param(value, name="p"):
    return Tensor.parameter(np.asarray(value, dtype=np.float64), name)


def test_zero_gradient_leaves_parameters_unchanged():
    p = make_param([[1.0, -2.0]])
    opt = Adam([p])
    p.grad = np.zeros_like(p.data)
    opt.step()
    assert np.array_equal(p.data, [[1.0, -2.0]])


def test_single_step_hand_value():
    # g = 1, lr = 2e-4, betas (0.7, 0.999): bias correction gives
    # m_hat = v_hat = 1, so the step is -lr / (1 + eps)
    p = make_param([0.0])
    opt = Adam([p], lr=2e-4, beta1=0.7, beta2=0.999, eps=1e-8)
    p.grad = np.array([1.0])
    opt.step()
    expected = -2e-4 / (1.0 + 1e-8)
    assert p.data[0] == pytest.approx(expected, rel=1e-12)
    assert opt.state.t == 1


def test_constant_gradient_approaches_sign_step():
    p = make_param([5.0])
    lr = 1e-3
    opt = Adam([p], lr=lr, beta1=0.9, beta2=0.999)
    for _ in range(600):
        p.grad = np.array([2.5])
        before = p.data.copy()
        opt.step()
    delta = p.data - before
    assert delta[0] == pytest.approx(-lr, rel=1e-3)


def test_direction_follows_negative_gradient():
    p = make_param([[0.0, 0.0]])
    opt = Adam([p])
    p.grad = np.array([[3.0, -3.0]])
    opt.step()
    assert p.data[0, 0] < 0 < p.data[0, 1]


def test_minimizes_quadratic():
    target = np.array([1.5, -0.5, 2.0])
    p = make_param(np.zeros(3))
    opt = Adam([p], lr=0.05)
    for _ in range(2000):
        p.grad = 2.0 * (p.data - target)
        opt.step()
    assert np.abs(p.data - target).max() < 1e-3


def test_shape_mismatch_rejected():
    p = make_param(np.zeros((2, 2)))
    opt = Adam([p])
    p.grad = np.zeros(3)
    with pytest.raises(DimensionError):
        opt.step()


def test_requires_unique_names():
    a = make_param([0.0], "same")
    b = make_param([0.0], "same")
    with pytest.raises(DimensionError):
        Adam([a, b])


def test_missing_grad_treated_as_zero():
    p = make_param([1.0])
    opt = Adam([p])
    p.grad = None
    opt.step()
    assert p.data[0] == 1.0

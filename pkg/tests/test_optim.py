import numpy as np
import pytest

from edenet.errors import ShapeError
from edenet.optim import AdamState, SgdState, adam_step, make_optimizer, sgd_step


def test_sgd_step_is_exact():
    p = np.array([1.0, -2.0])
    sgd_step(SgdState(lr=0.1), [p], [np.array([0.5, -1.0])])
    assert np.allclose(p, [0.95, -1.9])


def test_sgd_shape_mismatch():
    with pytest.raises(ShapeError):
        sgd_step(SgdState(), [np.zeros(2)], [np.zeros(3)])


def test_adam_first_step_is_signed_lr():
    # with zero state, m-hat = g and v-hat = g^2, so the update is
    # lr * g / (|g| + eps) which is lr * sign(g) up to eps
    p = np.array([1.0, 1.0, 1.0])
    g = np.array([3.0, -0.01, 1e-6])
    state = AdamState.for_params([p], lr=0.5)
    adam_step(state, [p], [g])
    expected = 1.0 - 0.5 * g / (np.abs(g) + 1e-8)
    assert np.allclose(p, expected, atol=1e-12)
    assert state.step == 1


def test_adam_minimizes_quadratic():
    # w^2 from w=1: a few hundred steps at lr 0.01 must cross |w| < 0.5
    w = np.array([1.0])
    state = AdamState.for_params([w], lr=0.01)
    for _ in range(200):
        adam_step(state, [w], [2.0 * w])
    assert abs(w[0]) < 0.5
    assert state.step == 200


def test_adam_state_counts_steps_and_checks_shapes():
    p = np.zeros((2, 2))
    state = AdamState.for_params([p])
    with pytest.raises(ShapeError):
        adam_step(state, [p], [np.zeros(3)])
    with pytest.raises(ShapeError):
        adam_step(state, [p, p], [np.zeros((2, 2))])


def test_make_optimizer_dispatch():
    p = [np.zeros(2)]
    state, step = make_optimizer("adam", p, lr=0.1)
    assert isinstance(state, AdamState) and step is adam_step
    state, step = make_optimizer("sgd", p, lr=0.1)
    assert isinstance(state, SgdState) and step is sgd_step
    with pytest.raises(ValueError):
        make_optimizer("lbfgs", p, lr=0.1)


def test_adam_deterministic_across_runs():
    def run():
        w = np.array([0.3, -0.7])
        state = AdamState.for_params([w], lr=0.05)
        for k in range(50):
            adam_step(state, [w], [np.sin(w) + k * 0.01])
        return w

    assert np.array_equal(run(), run())

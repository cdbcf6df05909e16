import math

import numpy as np
import pytest

from lwr.nn import (
    Gradients, LayerSpec, MlpModel, MlpSpec, backward, build_mlp, forward, forward_batch,
    glorot_bound, init_optimizer, optimizer_step,
)
from lwr.numerics import RandomStream

# hidden layers of every network used by the bundled experiments
PAPER_ARCHS = [
    (2, []),
    (2, [(2, "tanh")]),
    (3, [(6, "relu")]),
    (3, [(32, "tanh"), (64, "tanh")]),
    (14, []),
    (14, [(64, "tanh")]),
    (8, [(64, "relu"), (32, "relu")]),
    (8, [(64, "tanh"), (32, "tanh")]),
]


def _model(W_list, b_list, acts):
    W_list = [np.array(W, float) for W in W_list]
    layers = tuple(LayerSpec(W.shape[1], W.shape[0], a) for W, a in zip(W_list, acts))
    return MlpModel(MlpSpec(layers), [np.array(W, float) for W in W_list], [np.array(b, float) for b in b_list])


def test_build_shape_and_zero_bias():
    m = build_mlp(MlpSpec.from_hidden(2), RandomStream(3))
    assert m.weights[0].shape == (1, 2)
    np.testing.assert_array_equal(m.biases[0], [0.0])


def test_build_deterministic():
    spec = MlpSpec.from_hidden(3, [(5, "tanh")])
    a, b = build_mlp(spec, RandomStream(11)), build_mlp(spec, RandomStream(11))
    for x, y in zip(a.weights + a.biases, b.weights + b.biases):
        np.testing.assert_array_equal(x, y)


def test_glorot_scale():
    spec = MlpSpec.from_hidden(2, [(2, "tanh")])
    w = np.concatenate([build_mlp(spec, RandomStream(i)).weights[0].ravel() for i in range(1000)])
    expected = glorot_bound(2, 2) / math.sqrt(3.0)  # std of U(-a, a)
    assert abs(w.std() / expected - 1.0) < 0.2
    assert np.all(np.abs(w) <= glorot_bound(2, 2))


def test_spec_validation():
    with pytest.raises(ValueError, match="outputs 3"):
        MlpSpec((LayerSpec(2, 3, "tanh"), LayerSpec(2, 1)))
    with pytest.raises(ValueError, match="one linear output"):
        MlpSpec((LayerSpec(2, 1, "tanh"),))
    with pytest.raises(ValueError, match="activation"):
        LayerSpec(2, 2, "sigmoid")


def test_forward_zero_model():
    m = _model([np.zeros((2, 3)), np.zeros((1, 2))], [np.zeros(2), np.zeros(1)], ["tanh", "linear"])
    assert forward(m, np.array([1.0, -2.0, 3.0]))[0] == 0.0


def test_forward_linear_hand():
    m = _model([[[1.0, -1.0]]], [[0.5]], ["linear"])
    assert forward(m, np.array([2.0, 1.0]))[0] == 1.5


def test_forward_tanh_hand():
    W1, b1 = np.array([[0.3, -0.7], [1.1, 0.2]]), np.array([0.1, -0.4])
    W2, b2 = np.array([[0.5, -1.5]]), np.array([0.25])
    m = _model([W1, W2], [b1, b2], ["tanh", "linear"])
    x = np.array([0.6, -1.2])
    hidden = [math.tanh(0.3 * 0.6 + 0.7 * 1.2 + 0.1), math.tanh(1.1 * 0.6 - 0.2 * 1.2 - 0.4)]
    expected = 0.5 * hidden[0] - 1.5 * hidden[1] + 0.25
    assert abs(forward(m, x)[0] - expected) <= 1e-12


def test_forward_is_pure(np_rng):
    m = build_mlp(MlpSpec.from_hidden(3, [(4, "relu")]), RandomStream(0))
    X = np_rng.normal(size=(5, 3))
    np.testing.assert_array_equal(forward_batch(m, X)[0], forward_batch(m, X)[0])


def test_activation_ranges(np_rng):
    m = build_mlp(MlpSpec.from_hidden(3, [(8, "relu"), (8, "tanh")]), RandomStream(1))
    _, cache = forward_batch(m, np_rng.normal(size=(50, 3)))
    assert np.all(cache.posts[1] >= 0)
    assert np.all(np.abs(cache.posts[2]) < 1)
    np.testing.assert_array_equal(cache.posts[3], cache.pres[2])


def test_forward_shape_error():
    m = build_mlp(MlpSpec.from_hidden(3), RandomStream(0))
    with pytest.raises(ValueError, match="input dim 3"):
        forward(m, np.zeros(2))


def test_backward_zero_upstream():
    m = build_mlp(MlpSpec.from_hidden(2, [(3, "tanh")]), RandomStream(0))
    _, cache = forward(m, np.array([1.0, 2.0]))
    g = backward(m, cache, 0.0)
    assert np.all(g.flat() == 0.0)


def test_backward_linear_hand():
    m = _model([[[1.0, -1.0]]], [[0.5]], ["linear"])
    _, cache = forward(m, np.array([2.0, 1.0]))
    g = backward(m, cache, 1.0)
    np.testing.assert_array_equal(g.weights[0], [[2.0, 1.0]])
    np.testing.assert_array_equal(g.biases[0], [1.0])


def test_backward_rejects_foreign_cache():
    a = build_mlp(MlpSpec.from_hidden(2, [(3, "tanh")]), RandomStream(0))
    b = build_mlp(MlpSpec.from_hidden(2, [(4, "tanh")]), RandomStream(0))
    _, cache = forward(a, np.ones(2))
    with pytest.raises(ValueError):
        backward(b, cache, 1.0)


def _params(m):
    return [p for pair in zip(m.weights, m.biases) for p in pair]


def _fd_check(m, x, upstream, step=1e-5):
    _, cache = forward(m, x)
    g = backward(m, cache, upstream)
    grads = [p for pair in zip(g.weights, g.biases) for p in pair]
    for p, gp in zip(_params(m), grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + step
            up = forward(m, x)[0]
            p[idx] = old - step
            down = forward(m, x)[0]
            p[idx] = old
            fd = upstream * (up - down) / (2 * step)
            an = gp[idx]
            if abs(fd) < 1e-8 and abs(an) < 1e-8:
                continue
            assert abs(an - fd) <= 1e-4 * max(abs(an), abs(fd)) + 1e-8, (idx, an, fd)


@pytest.mark.parametrize("case", range(100))
def test_backward_matches_finite_differences(case):
    g = np.random.default_rng(case)
    d, hidden = PAPER_ARCHS[case % len(PAPER_ARCHS)]
    m = build_mlp(MlpSpec.from_hidden(d, hidden), RandomStream(case))
    for b in m.biases:
        b[:] = 0.1 * g.normal(size=b.shape)
    _fd_check(m, g.normal(size=d), float(g.normal()))


def test_sgd_step():
    m = _model([[[1.0, 2.0]]], [[0.0]], ["linear"])
    state = init_optimizer(m, "sgd", 0.1)
    optimizer_step(m, Gradients([np.array([[1.0, -3.0]])], [np.array([2.0])]), state)
    np.testing.assert_allclose(m.weights[0], [[0.9, 2.3]], rtol=0, atol=1e-15)
    np.testing.assert_allclose(m.biases[0], [-0.2], rtol=0, atol=1e-15)


def test_sgd_zero_gradient_fixed_point():
    m = build_mlp(MlpSpec.from_hidden(2, [(3, "relu")]), RandomStream(0))
    before = [p.copy() for p in _params(m)]
    state = init_optimizer(m, "sgd", 0.5, momentum=0.9)
    zero = Gradients([np.zeros_like(W) for W in m.weights], [np.zeros_like(b) for b in m.biases])
    optimizer_step(m, zero, state)
    for a, b in zip(before, _params(m)):
        np.testing.assert_array_equal(a, b)


def test_adam_hand_computed():
    m = _model([[[0.5, -0.25]]], [[0.1]], ["linear"])
    state = init_optimizer(m, "adam", 0.01)
    state.step = 4
    state.first = [np.array([[0.2, -0.1]]), np.array([0.05])]
    state.second = [np.array([[0.04, 0.01]]), np.array([0.002])]
    grad = Gradients([np.array([[0.3, 0.6]])], [np.array([-0.2])])
    optimizer_step(m, grad, state)
    t, b1, b2, lr, eps = 5, 0.9, 0.999, 0.01, 1e-8
    for p0, m0, v0, g, got in [(0.5, 0.2, 0.04, 0.3, m.weights[0][0, 0]),
                               (-0.25, -0.1, 0.01, 0.6, m.weights[0][0, 1]),
                               (0.1, 0.05, 0.002, -0.2, m.biases[0][0])]:
        m1 = b1 * m0 + (1 - b1) * g
        v1 = b2 * v0 + (1 - b2) * g * g
        expected = p0 - lr * (m1 / (1 - b1 ** t)) / (math.sqrt(v1 / (1 - b2 ** t)) + eps)
        assert abs(got - expected) <= 1e-12
    assert state.step == 5


def test_nonfinite_gradient_names_layer():
    m = build_mlp(MlpSpec.from_hidden(2, [(3, "tanh")]), RandomStream(0))
    state = init_optimizer(m)
    grads = Gradients([np.zeros((3, 2)), np.array([[np.nan, 0.0, 0.0]])], [np.zeros(3), np.zeros(1)])
    with pytest.raises(FloatingPointError, match="layer 1"):
        optimizer_step(m, grads, state)


def test_model_dict_round_trip():
    m = build_mlp(MlpSpec.from_hidden(3, [(4, "relu")]), RandomStream(5))
    back = MlpModel.from_dict(m.to_dict())
    for a, b in zip(_params(m), _params(back)):
        np.testing.assert_array_equal(a, b)
    assert back.spec == m.spec

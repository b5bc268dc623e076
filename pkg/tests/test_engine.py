import numpy as np
import pytest

from lgso.engine import (
    MLP,
    AdamState,
    Dense,
    ShapeError,
    Tensor,
    adam_update,
    concat,
    finite_diff_check,
    grad,
    l2norm,
    leaky_relu,
    no_grad,
    sigmoid,
    square,
    tanh,
)


def test_activation_values():
    x = Tensor(np.array([0.0, -2.0, 0.0]))
    assert tanh(x).data[0] == 0.0
    assert leaky_relu(x, 0.01).data[1] == pytest.approx(-0.02)
    assert sigmoid(x).data[2] == pytest.approx(0.5)


def test_identity_dense_passes_input_through():
    layer = Dense(3, 3, "identity", rng=np.random.default_rng(0))
    layer.w.data = np.eye(3)
    layer.b.data = np.zeros(3)
    x = np.array([[1.5, -2.0, 0.25]])
    assert np.array_equal(layer(Tensor(x)).data, x)


def test_grad_of_linear_term():
    # d(w*x)/dw at x=3 is 3
    w = Tensor(np.array([2.0]), requires_grad=True)
    y = (w * 3.0).sum()
    assert grad(y, [w])[0].data[0] == pytest.approx(3.0)


def test_tanh_derivative_at_zero():
    x = Tensor(np.array([0.0]), requires_grad=True)
    y = tanh(x).sum()
    assert grad(y, [x])[0].data[0] == pytest.approx(1.0)


def test_mlp_matches_finite_differences():
    rng = np.random.default_rng(7)
    net = MLP([4, 8, 1], ["tanh", "identity"], rng=rng)

    def f(v):
        return net(v.reshape((1, 4))).sum()

    assert finite_diff_check(f, rng.standard_normal(4)) < 1e-4


def test_grad_through_shared_subexpression():
    # y = x*x + x uses x twice; grad accumulates to 2x + 1
    x = Tensor(np.array([3.0]), requires_grad=True)
    y = (x * x + x).sum()
    assert grad(y, [x])[0].data[0] == pytest.approx(7.0)


def test_unbroadcast_bias_grad():
    b = Tensor(np.zeros(3), requires_grad=True)
    x = Tensor(np.ones((5, 3)))
    y = (x + b).sum()
    assert np.allclose(grad(y, [b])[0].data, 5.0)


def test_concat_and_slice_grads():
    a = Tensor(np.array([[1.0, 2.0]]), requires_grad=True)
    b = Tensor(np.array([[3.0]]), requires_grad=True)
    y = (concat([a, b], axis=1) * Tensor(np.array([[1.0, 10.0, 100.0]]))).sum()
    ga, gb = grad(y, [a, b])
    assert np.array_equal(ga.data, [[1.0, 10.0]])
    assert np.array_equal(gb.data, [[100.0]])

    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    y = x[:, 1:].sum()
    gx = grad(y, [x])[0].data
    assert np.array_equal(gx, [[0, 1, 1], [0, 1, 1]])


def test_double_backward_gradient_penalty():
    # second derivative through a norm-of-gradient expression stays exact
    x = Tensor(np.array([[0.3, -0.7]]), requires_grad=True)
    f = (square(x) * Tensor(np.array([[2.0, 1.0]]))).sum()
    gx = grad(f, [x], create_graph=True)[0]
    pen = square(l2norm(gx) - 1.0)
    gp = grad(pen, [x])[0].data
    x1, x2 = 0.3, -0.7
    n = np.sqrt(16 * x1**2 + 4 * x2**2)
    want = 2 * (n - 1) / n * np.array([16 * x1, 4 * x2])
    assert np.allclose(gp, want)


def test_grad_zero_for_unused_input():
    x = Tensor(np.array([1.0]), requires_grad=True)
    z = Tensor(np.array([1.0]), requires_grad=True)
    y = (x * 2.0).sum()
    assert grad(y, [z])[0].data[0] == 0.0


def test_no_grad_blocks_recording():
    x = Tensor(np.array([1.0]), requires_grad=True)
    with no_grad():
        y = (x * 2.0).sum()
    assert not y.requires_grad


def test_grad_rejects_nonscalar_output():
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    with pytest.raises(ShapeError):
        grad(x * 2.0, [x])


def test_matmul_shape_error_names_shapes():
    a = Tensor(np.ones((2, 3)))
    b = Tensor(np.ones((4, 2)))
    with pytest.raises(ShapeError, match=r"\(2, 3\)"):
        a @ b


def test_dense_rejects_wrong_input_width():
    layer = Dense(3, 2, rng=np.random.default_rng(0))
    with pytest.raises(ShapeError):
        layer(Tensor(np.ones((1, 4))))


def test_unknown_activation_rejected():
    with pytest.raises(ValueError, match="relu6"):
        Dense(2, 2, "relu6")


def test_mlp_init_is_seed_deterministic():
    a = MLP([3, 4, 2], ["tanh", "identity"], rng=np.random.default_rng(42))
    b = MLP([3, 4, 2], ["tanh", "identity"], rng=np.random.default_rng(42))
    for k in a.parameters():
        assert np.array_equal(a.parameters()[k].data, b.parameters()[k].data)


def test_state_dict_roundtrip():
    a = MLP([3, 4, 2], ["tanh", "identity"], rng=np.random.default_rng(1))
    b = MLP([3, 4, 2], ["tanh", "identity"], rng=np.random.default_rng(2))
    b.load_state_dict(a.state_dict())
    x = Tensor(np.random.default_rng(3).standard_normal((5, 3)))
    assert np.array_equal(a(x).data, b(x).data)


def test_adam_first_step_magnitude_is_lr():
    state = AdamState(lr=0.1)
    params = {"w": np.array([0.0])}
    grads = {"w": np.array([1.0])}
    new, state = adam_update(params, grads, state)
    assert abs(abs(new["w"][0] - params["w"][0]) - 0.1) < 1e-8
    assert state.t == 1


def test_adam_zero_grad_is_noop():
    state = AdamState(lr=0.1)
    params = {"w": np.array([1.5, -2.0])}
    new, _ = adam_update(params, {"w": np.zeros(2)}, state)
    assert np.array_equal(new["w"], params["w"])


def test_adam_rejects_nonfinite_grad():
    state = AdamState()
    with pytest.raises(FloatingPointError, match="w"):
        adam_update({"w": np.array([0.0])}, {"w": np.array([np.nan])}, state)


def test_adam_is_deterministic():
    def run():
        state = AdamState(lr=0.05)
        p = {"w": np.array([1.0, 2.0])}
        for t in range(5):
            g = {"w": np.array([0.3 * (t + 1), -0.1])}
            p, state = adam_update(p, g, state)
        return p["w"]

    assert np.array_equal(run(), run())


def test_finite_diff_check_quadratic_is_exact():
    # central differences are exact on x^2 up to float rounding
    err = finite_diff_check(lambda x: square(x).sum(), np.array([1.0]), h=0.1)
    assert err < 1e-14


def test_finite_diff_check_constant_function():
    err = finite_diff_check(lambda x: (x * 0.0).sum(), np.array([0.7, -0.2]), h=0.1)
    assert err == 0.0


@pytest.mark.filterwarnings("ignore:invalid value encountered")
def test_finite_diff_check_rejects_nonfinite():
    from lgso.engine import log

    with pytest.raises(FloatingPointError):
        finite_diff_check(lambda x: log(x).sum(), np.array([1e-9]), h=1.0)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalae.exceptions import ConfigurationError
from causalae.nn import (
    AdamState,
    Network,
    NetworkSpec,
    adam_update,
    finite_difference_gradient,
    mse_loss,
    softmax,
)


def max_relative_error(analytic, numeric, floor=1e-3):
    worst = 0.0
    for a, f in zip(analytic, numeric):
        denom = np.maximum(np.abs(a) + np.abs(f), floor)
        worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst


# -- softmax ----------------------------------------------------------------

def test_softmax_uniform_on_zeros():
    assert np.allclose(softmax(np.zeros(4)), 0.25)


def test_softmax_ln2_case():
    out = softmax(np.array([np.log(2.0), 0.0, 0.0, 0.0]))
    assert np.allclose(out, [0.4, 0.2, 0.2, 0.2])


def test_softmax_large_inputs_do_not_overflow():
    out = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(out))
    assert out[0] == pytest.approx(1.0)
    assert out[1] == pytest.approx(0.0, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=16),
    st.floats(min_value=-100, max_value=100),
)
def test_softmax_sums_to_one_and_is_shift_invariant(values, shift):
    v = np.array(values)
    out = softmax(v)
    assert abs(out.sum() - 1.0) < 1e-12
    shifted = softmax(v + shift)
    assert np.argmax(shifted) == np.argmax(out)
    assert np.allclose(shifted, out, atol=1e-9)


def test_softmax_batched_rows_each_sum_to_one():
    rng = np.random.default_rng(0)
    out = softmax(rng.standard_normal((64, 7)))
    assert np.max(np.abs(out.sum(axis=1) - 1.0)) < 1e-12


# -- mse --------------------------------------------------------------------

def test_mse_zero_for_equal_inputs():
    x = np.random.default_rng(1).standard_normal((5, 3))
    loss, grad = mse_loss(x, x)
    assert loss == 0.0
    assert np.all(grad == 0.0)


def test_mse_single_sample_hand_value():
    x_hat = np.array([[1.0, 2.0]])
    x = np.array([[0.0, 0.0]])
    loss, grad = mse_loss(x_hat, x)
    assert loss == pytest.approx(5.0)
    assert np.allclose(grad, [[2.0, 4.0]])


def test_mse_matches_double_loop_oracle():
    rng = np.random.default_rng(2)
    x_hat = rng.standard_normal((7, 4))
    x = rng.standard_normal((7, 4))
    loss, _ = mse_loss(x_hat, x)
    total = 0.0
    for i in range(7):
        for j in range(4):
            total += (x_hat[i, j] - x[i, j]) ** 2
    assert loss == pytest.approx(total / 7, rel=1e-12)


def test_mse_shape_mismatch_raises():
    with pytest.raises(ConfigurationError):
        mse_loss(np.zeros((2, 3)), np.zeros((3, 2)))


# -- forward ----------------------------------------------------------------

def test_identity_network_passes_input_through():
    spec = NetworkSpec((3, 3), ("identity",), (False,))
    net = Network(spec, 0)
    net.layers[0].weights = np.eye(3)
    net.layers[0].bias = np.zeros(3)
    x = np.random.default_rng(3).standard_normal((4, 3))
    assert np.allclose(net.forward(x, train=True).output, x)


def test_relu_clamps_negatives():
    spec = NetworkSpec((3, 3), ("relu",), (False,))
    net = Network(spec, 0)
    net.layers[0].weights = np.eye(3)
    net.layers[0].bias = np.zeros(3)
    out = net.forward(np.array([[-1.0, 0.0, 2.0]]), train=True).output
    assert np.allclose(out, [[0.0, 0.0, 2.0]])


def test_batch_norm_is_identity_on_standardized_batch():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((256, 5))
    x = (x - x.mean(axis=0)) / x.std(axis=0)
    spec = NetworkSpec((5, 5), ("identity",), (True,))
    net = Network(spec, 0)
    net.layers[0].weights = np.eye(5)
    net.layers[0].bias = np.zeros(5)
    out = net.forward(x, train=True).output
    assert np.max(np.abs(out - x)) < 1e-4  # only the eps in the denominator


def test_batch_norm_train_mode_standardizes_features():
    rng = np.random.default_rng(5)
    x = 3.0 + 2.5 * rng.standard_normal((32, 6))
    spec = NetworkSpec((6, 6), ("identity",), (True,))
    net = Network(spec, 0)
    net.layers[0].weights = np.eye(6)
    net.layers[0].bias = np.zeros(6)
    fp = net.forward(x, train=True)
    normalized = fp.caches[0].normalized
    assert np.max(np.abs(normalized.mean(axis=0))) < 1e-6
    assert np.max(np.abs(normalized.var(axis=0) - 1.0)) < 1e-4


def test_batch_norm_infer_uses_running_statistics():
    spec = NetworkSpec((2, 2), ("identity",), (True,))
    net = Network(spec, 0)
    net.layers[0].weights = np.eye(2)
    net.layers[0].bias = np.zeros(2)
    bn = net.norms[0]
    bn.running_mean = np.array([1.0, -1.0])
    bn.running_var = np.array([4.0, 0.25])
    out = net.forward(np.array([[1.0, -1.0]]), train=False).output
    assert np.allclose(out, 0.0, atol=1e-3)


def test_forward_rejects_wrong_input_width():
    net = Network(NetworkSpec((3, 2), ("relu",), (False,)), 0)
    with pytest.raises(ConfigurationError):
        net.forward(np.zeros((4, 5)), train=True)


def test_forward_is_deterministic():
    net = Network(NetworkSpec((4, 3, 2), ("relu", "softmax"), (True, False)), 9)
    x = np.random.default_rng(6).standard_normal((10, 4))
    a = net.forward(x, train=False).output
    b = net.forward(x, train=False).output
    assert np.array_equal(a, b)


# -- spec validation ---------------------------------------------------------

def test_spec_rejects_softmax_before_last_layer():
    with pytest.raises(ConfigurationError):
        NetworkSpec((3, 3, 3), ("softmax", "relu"), (False, False))


def test_spec_rejects_empty_and_bad_sizes():
    with pytest.raises(ConfigurationError):
        NetworkSpec((3,), (), ())
    with pytest.raises(ConfigurationError):
        NetworkSpec((3, 0), ("relu",), (False,))
    with pytest.raises(ConfigurationError):
        NetworkSpec((3, 2), ("tanh",), (False,))


# -- backward ----------------------------------------------------------------

def test_backward_zero_gradient_gives_zero_param_gradients():
    net = Network(NetworkSpec((4, 3, 2), ("relu", "identity"), (True, False)), 11)
    x = np.random.default_rng(7).standard_normal((8, 4))
    fp = net.forward(x, train=True)
    grads, gx = net.backward(fp, np.zeros_like(fp.output))
    assert all(np.all(g == 0.0) for g in grads)
    assert np.all(gx == 0.0)


def test_backward_linear_layer_matches_closed_form():
    # single identity layer with MSE against the input itself
    spec = NetworkSpec((3, 3), ("identity",), (False,))
    net = Network(spec, 12)
    x = np.random.default_rng(8).standard_normal((6, 3))
    fp = net.forward(x, train=True)
    _, grad = mse_loss(fp.output, x)
    grads, _ = net.backward(fp, grad)
    w, b = net.layers[0].weights, net.layers[0].bias
    resid = x @ w.T + b - x
    expected_w = 2.0 * resid.T @ x / len(x)
    expected_b = 2.0 * resid.sum(axis=0) / len(x)
    assert np.allclose(grads[0], expected_w, atol=1e-12)
    assert np.allclose(grads[1], expected_b, atol=1e-12)


def test_backward_matches_finite_differences_two_layer_relu():
    spec = NetworkSpec((6, 4, 6), ("relu", "identity"), (False, False))
    net = Network(spec, 13)
    x = np.random.default_rng(9).standard_normal((8, 6))
    target = np.random.default_rng(10).standard_normal((8, 6))

    def loss_fn():
        return mse_loss(net.forward(x, train=True).output, target)[0]

    fp = net.forward(x, train=True)
    _, grad = mse_loss(fp.output, target)
    analytic, _ = net.backward(fp, grad)
    numeric = finite_difference_gradient(loss_fn, net.parameters(), eps=1e-5)
    assert max_relative_error(analytic, numeric) < 1e-4


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_backward_matches_finite_differences_full_stack(seed):
    # four layers exercising relu + batch norm + softmax + MSE together
    spec = NetworkSpec(
        (5, 4, 3, 4),
        ("relu", "relu", "softmax"),
        (True, True, True),
    )
    net = Network(spec, 100 + seed)
    rng = np.random.default_rng(200 + seed)
    x = rng.standard_normal((8, 5))
    target = rng.standard_normal((8, 4))

    def loss_fn():
        return mse_loss(net.forward(x, train=True).output, target)[0]

    fp = net.forward(x, train=True)
    _, grad = mse_loss(fp.output, target)
    analytic, _ = net.backward(fp, grad)
    numeric = finite_difference_gradient(loss_fn, net.parameters(), eps=1e-5)
    assert max_relative_error(analytic, numeric) < 1e-4


def test_backward_rejects_infer_mode_pass_and_stale_shapes():
    net = Network(NetworkSpec((3, 2), ("identity",), (True,)), 14)
    x = np.zeros((4, 3))
    fp_infer = net.forward(x, train=False)
    with pytest.raises(ConfigurationError):
        net.backward(fp_infer, np.zeros((4, 2)))
    fp = net.forward(x, train=True)
    with pytest.raises(ConfigurationError):
        net.backward(fp, np.zeros((5, 2)))


# -- adam ---------------------------------------------------------------------

def test_adam_first_step_moves_by_lr_times_sign():
    params = [np.array([1.0, -2.0, 0.5])]
    grads = [np.array([100.0, -0.001, 3.0])]
    state = AdamState.for_params(params, lr=0.1, epsilon=1e-12)
    adam_update(params, grads, state)
    assert np.allclose(params[0], [1.0 - 0.1, -2.0 + 0.1, 0.5 - 0.1], atol=1e-6)
    assert state.step_count == 1


def test_adam_zero_gradient_is_a_noop():
    params = [np.array([1.0, 2.0]), np.array([[3.0]])]
    before = [p.copy() for p in params]
    state = AdamState.for_params(params)
    adam_update(params, [np.zeros(2), np.zeros((1, 1))], state)
    assert all(np.array_equal(p, b) for p, b in zip(params, before))


def test_adam_two_steps_decrease_quadratic():
    # hand simulation of f(w) = w^2 from w = 1 with lr 0.1
    w = np.array([1.0])
    state = AdamState.for_params([w], lr=0.1)
    values = [float(w[0] ** 2)]
    for _ in range(2):
        adam_update([w], [2.0 * w], state)
        values.append(float(w[0] ** 2))
    assert values[1] < values[0]
    assert values[2] < values[1]


def test_adam_rejects_bad_betas():
    with pytest.raises(ConfigurationError):
        AdamState.for_params([np.zeros(1)], beta1=1.0)


# -- finite differences -------------------------------------------------------

def test_finite_difference_on_quadratic():
    w = np.array([3.0])
    grads = finite_difference_gradient(lambda: float(w[0] ** 2), [w], eps=1e-5)
    assert grads[0][0] == pytest.approx(6.0, abs=1e-6)
    assert w[0] == 3.0  # restored


def test_finite_difference_of_constant_is_zero():
    w = np.random.default_rng(15).standard_normal((2, 3))
    grads = finite_difference_gradient(lambda: 42.0, [w], eps=1e-5)
    assert np.all(grads[0] == 0.0)


def test_finite_difference_rejects_nonpositive_eps():
    with pytest.raises(ConfigurationError):
        finite_difference_gradient(lambda: 0.0, [np.zeros(1)], eps=0.0)

"""Network core: parameter accounting, reproducible init, exact backprop."""

import math
from fractions import Fraction

import numpy as np
import pytest

from splitfed import (
    Activation,
    CutOutOfRange,
    CutPoint,
    EmptyList,
    InvalidParam,
    LengthMismatch,
    ModelSpec,
    ShapeMismatch,
    average_params,
    backward,
    cut_stats,
    forward,
    forward_back,
    forward_front,
    init_params,
    param_count,
    random_dataset,
    sgd_step,
    split_params,
    splitmix64,
)
from splitfed.nn_core import layer_param_counts, mse_loss, uniform01

MASK64 = (1 << 64) - 1


def splitmix64_sequential(seed, count):
    """Step-by-step reference implementation, the oracle for the vectorized stream."""
    out = []
    state = seed & MASK64
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        out.append(z ^ (z >> 31))
    return out


# --- parameter accounting ----------------------------------------------------

def test_param_count_hand_counts():
    assert param_count(ModelSpec((4, 3, 2))) == 23  # 4*3+3 + 3*2+2
    assert param_count(ModelSpec((1, 1))) == 2
    assert param_count(ModelSpec((2, 5, 5, 1))) == 51  # 15 + 30 + 6


def test_layer_param_counts():
    assert layer_param_counts(ModelSpec((4, 3, 2))) == (15, 8)
    assert layer_param_counts(ModelSpec((2, 5, 5, 1))) == (15, 30, 6)


def test_model_spec_validation():
    with pytest.raises(InvalidParam):
        ModelSpec((4,))
    with pytest.raises(InvalidParam):
        ModelSpec((4, 0, 2))


def test_cut_stats_hand_counts():
    q, eta = cut_stats(ModelSpec((4, 3, 2)), 1)
    assert q == 3 and eta == Fraction(15, 23)
    q, eta = cut_stats(ModelSpec((2, 5, 5, 1)), CutPoint(2))
    assert q == 5 and eta == Fraction(45, 51)


def test_cut_out_of_range():
    with pytest.raises(CutOutOfRange):
        cut_stats(ModelSpec((1, 1)), 1)  # single weight layer has no interior cut
    spec = ModelSpec((4, 3, 2))
    with pytest.raises(CutOutOfRange):
        cut_stats(spec, 0)
    with pytest.raises(CutOutOfRange):
        cut_stats(spec, 2)


# --- splitmix64 and init -----------------------------------------------------

def test_splitmix64_matches_sequential_reference():
    for seed in (0, 1, 42, 0xDEADBEEF, (1 << 63) + 17, -5):
        got = [int(v) for v in splitmix64(seed, 64)]
        assert got == splitmix64_sequential(seed, 64)


def test_uniform01_range_and_determinism():
    u = uniform01(42, 10000)
    assert np.all(u >= 0.0) and np.all(u < 1.0)
    assert np.array_equal(u, uniform01(42, 10000))


def test_init_params_deterministic():
    spec = ModelSpec((4, 3, 2))
    assert np.array_equal(init_params(spec, 42), init_params(spec, 42))
    assert not np.array_equal(init_params(spec, 42), init_params(spec, 43))


def test_init_params_within_fan_in_bounds():
    spec = ModelSpec((4, 3, 2))
    v = init_params(spec, 42)
    assert v.size == 23
    first, second = v[:15], v[15:]
    assert np.all(np.abs(first) <= 1 / math.sqrt(4))
    assert np.all(np.abs(second) <= 1 / math.sqrt(3))


def test_random_dataset_shapes_and_range():
    spec = ModelSpec((4, 3, 2))
    x, y = random_dataset(spec, 6, 42)
    assert x.shape == (6, 4) and y.shape == (6, 2)
    assert np.all(np.abs(x) <= 1.0) and np.all(np.abs(y) <= 1.0)
    x2, y2 = random_dataset(spec, 6, 42)
    assert np.array_equal(x, x2) and np.array_equal(y, y2)


# --- forward -----------------------------------------------------------------

def test_forward_zero_net_zero_input():
    spec = ModelSpec((4, 3, 2), Activation.IDENTITY)
    trace = forward(spec, np.zeros(23), np.zeros((3, 4)))
    assert np.array_equal(trace.outputs, np.zeros((3, 2)))


def test_forward_single_affine_unit():
    spec = ModelSpec((1, 1), Activation.IDENTITY)
    w, b = 1.75, -0.25
    for x in (-2.0, 0.0, 3.5):
        out = forward(spec, np.array([w, b]), np.array([[x]])).outputs
        assert out[0, 0] == pytest.approx(w * x + b, rel=1e-15)


def test_forward_shape_mismatch():
    spec = ModelSpec((4, 3, 2))
    with pytest.raises(ShapeMismatch):
        forward(spec, init_params(spec, 1), np.zeros((3, 5)))
    with pytest.raises(LengthMismatch):
        forward(spec, np.zeros(10), np.zeros((3, 4)))


@pytest.mark.parametrize("activation", list(Activation))
def test_split_forward_matches_monolithic_at_every_cut(activation):
    spec = ModelSpec((5, 4, 3, 2), activation)
    params = init_params(spec, 9)
    x, _ = random_dataset(spec, 7, 3)
    full = forward(spec, params, x)
    for cut in range(1, spec.weight_layers):
        client, server = split_params(spec, cut, params)
        smashed = forward_front(spec, cut, client, x)
        assert smashed.shape == (7, spec.layer_widths[cut])
        assert np.array_equal(smashed, full.activations[cut])
        outputs = forward_back(spec, cut, server, smashed)
        assert np.array_equal(outputs, full.outputs)


def test_smashed_scalar_count():
    spec = ModelSpec((4, 3, 2))
    client, _ = split_params(spec, 1, init_params(spec, 42))
    x, _ = random_dataset(spec, 3, 1)
    assert forward_front(spec, 1, client, x).size == 9  # 3 records x q=3


# --- backward ----------------------------------------------------------------

def test_backward_zero_everything():
    spec = ModelSpec((4, 3, 2), Activation.IDENTITY)
    result = backward(spec, np.zeros(23), np.zeros((2, 4)), np.zeros((2, 2)))
    assert result.loss == 0.0
    assert np.array_equal(result.param_grads, np.zeros(23))


def test_backward_single_unit_closed_form():
    # loss = mean((w x + b - y)^2); d/dw = mean(2 (w x + b - y) x), d/db = mean(2 (w x + b - y))
    spec = ModelSpec((1, 1), Activation.IDENTITY)
    w, b = 0.8, -0.3
    x = np.array([[0.5], [-1.0], [2.0]])
    y = np.array([[1.0], [0.0], [-0.5]])
    result = backward(spec, np.array([w, b]), x, y)
    resid = w * x + b - y
    assert result.loss == pytest.approx(float(np.mean(resid**2)), rel=1e-15)
    assert result.param_grads[0] == pytest.approx(float(np.mean(2 * resid * x)), rel=1e-14)
    assert result.param_grads[1] == pytest.approx(float(np.mean(2 * resid)), rel=1e-14)


def fd_gradient(spec, params, x, y, h=1e-5):
    g = np.zeros_like(params)
    for i in range(params.size):
        up = params.copy(); up[i] += h
        dn = params.copy(); dn[i] -= h
        lp = mse_loss(forward(spec, up, x).outputs, y)
        lm = mse_loss(forward(spec, dn, x).outputs, y)
        g[i] = (lp - lm) / (2 * h)
    return g


@pytest.mark.parametrize("activation", list(Activation))
@pytest.mark.parametrize("widths,batch,seed", [
    ((3, 5, 2), 4, 100),
    ((4, 3, 2), 1, 101),
    ((2, 5, 5, 1), 8, 102),
    ((8, 4, 3), 6, 103),
])
def test_gradient_matches_central_differences(activation, widths, batch, seed):
    spec = ModelSpec(widths, activation)
    params = init_params(spec, seed)
    x, y = random_dataset(spec, batch, seed + 1000)
    analytic = backward(spec, params, x, y).param_grads
    numeric = fd_gradient(spec, params, x, y)
    rel = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-300)
    rel[(analytic == 0) & (numeric == 0)] = 0.0
    assert rel.max() < 1e-6, f"max relative gradient error {rel.max():.3e}"


@pytest.mark.parametrize("activation", list(Activation))
def test_split_backward_matches_monolithic_at_every_cut(activation):
    from splitfed.nn_core import _back_trace, _backward_layers, _front_trace, _mse_and_grad

    spec = ModelSpec((5, 4, 3, 2), activation)
    params = init_params(spec, 21)
    x, y = random_dataset(spec, 5, 22)
    mono = backward(spec, params, x, y)
    for cut in range(1, spec.weight_layers):
        client, server = split_params(spec, cut, params)
        f_layers, f_zs, f_acts = _front_trace(spec, cut, client, x)
        b_layers, b_zs, b_acts = _back_trace(spec, cut, server, f_acts[-1])
        _, dout = _mse_and_grad(b_acts[-1], y)
        server_grads, b_act_grads = _backward_layers(
            b_layers, spec.activation, b_zs, b_acts, dout, cut, spec.weight_layers)
        client_grads, _ = _backward_layers(
            f_layers, spec.activation, f_zs, f_acts, b_act_grads[0], 0, spec.weight_layers)
        stitched = np.concatenate([client_grads, server_grads])
        assert np.array_equal(stitched, mono.param_grads)
        # the tensor crossing the cut carries q scalars per record
        assert b_act_grads[0].shape == (5, spec.layer_widths[cut])
        assert np.array_equal(b_act_grads[0], mono.activation_grads[cut])


def test_backward_label_shape_mismatch():
    spec = ModelSpec((4, 3, 2))
    params = init_params(spec, 1)
    with pytest.raises(ShapeMismatch):
        backward(spec, params, np.zeros((3, 4)), np.zeros((3, 3)))
    with pytest.raises(ShapeMismatch):
        backward(spec, params, np.zeros((3, 4)), np.zeros((2, 2)))


# --- sgd and averaging -------------------------------------------------------

def test_sgd_step_examples():
    params = np.array([1.0, 2.0])
    assert np.array_equal(sgd_step(params, np.array([5.0, -3.0]), 0.0), params)
    assert np.array_equal(sgd_step(params, np.array([1.0, 1.0]), 0.5), np.array([0.5, 1.5]))
    with pytest.raises(LengthMismatch):
        sgd_step(params, np.array([1.0]), 0.1)


def test_sgd_piecewise_matches_whole_vector():
    spec = ModelSpec((4, 3, 2))
    params = init_params(spec, 5)
    grads = backward(spec, params, *random_dataset(spec, 4, 6)).param_grads
    whole = sgd_step(params, grads, 0.1)
    client_p, server_p = split_params(spec, 1, params)
    client_g, server_g = split_params(spec, 1, grads)
    pieces = np.concatenate([sgd_step(client_p, client_g, 0.1), sgd_step(server_p, server_g, 0.1)])
    assert np.array_equal(whole, pieces)


def test_average_params_examples():
    assert np.array_equal(average_params([np.array([1.0, 2.0]), np.array([3.0, 4.0])]),
                          np.array([2.0, 3.0]))


def test_average_of_identical_copies_is_bit_exact():
    v = init_params(ModelSpec((4, 3, 2)), 13)
    for k in (1, 2, 3, 5, 7):
        assert np.array_equal(average_params([v] * k), v)


def test_average_matches_summation_oracle():
    rng = np.random.default_rng(3)
    vectors = [rng.normal(size=50) for _ in range(3)]
    got = average_params(vectors)
    oracle = np.array([math.fsum(v[i] for v in vectors) / 3 for i in range(50)])
    # error relative to the data scale; a near-cancelling mean would make
    # component-relative error meaningless for any float summation
    scale = np.abs(np.stack(vectors)).max(axis=0)
    rel = np.abs(got - oracle) / np.maximum(scale, 1e-300)
    assert rel.max() < 1e-15


def test_average_errors():
    with pytest.raises(EmptyList):
        average_params([])
    with pytest.raises(LengthMismatch):
        average_params([np.zeros(3), np.zeros(4)])

"""Minimal dense feed-forward network with exactly reproducible arithmetic.

The communication claims only depend on parameter counts and cut widths, so
the smallest fully checkable network suffices: affine layers, one activation
for hidden layers, linear output, mean squared error, float64 throughout.
Initialization runs on splitmix64 so the same seed yields bit-identical
weights on any platform.

Parameter vectors are flat float64 arrays, layer-major, weights before bias
within each layer; weight matrices are stored input-major, i.e. layer i maps
a batch ``a`` to ``a @ W_i + b_i`` with ``W_i`` of shape
``(layer_widths[i], layer_widths[i+1])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CutOutOfRange, EmptyList, InvalidParam, LengthMismatch, ShapeMismatch

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# Tweak applied to run seeds so synthetic data and weight init draw from
# disjoint streams even when given the same seed.
_DATA_SEED_TWEAK = 0xDA7A5EEDDA7A5EED


class Activation(str, Enum):
    IDENTITY = "Identity"
    RELU = "ReLU"
    SIGMOID = "Sigmoid"


@dataclass(frozen=True)
class ModelSpec:
    """Dense network: ordered layer widths plus the hidden-layer activation."""

    layer_widths: tuple[int, ...]
    activation: Activation = Activation.SIGMOID

    def __post_init__(self) -> None:
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise InvalidParam("layer_widths needs an input and an output width")
        if any(w < 1 for w in widths):
            raise InvalidParam(f"layer widths must be positive, got {widths}")
        if not isinstance(self.activation, Activation):
            raise InvalidParam(f"unknown activation {self.activation!r}")

    @property
    def weight_layers(self) -> int:
        return len(self.layer_widths) - 1

    @property
    def input_width(self) -> int:
        return self.layer_widths[0]

    @property
    def output_width(self) -> int:
        return self.layer_widths[-1]


@dataclass(frozen=True)
class CutPoint:
    """Boundary index: the client holds weight layers 1..cut_index."""

    cut_index: int


def _cut_index(spec: ModelSpec, cut: CutPoint | int) -> int:
    c = cut.cut_index if isinstance(cut, CutPoint) else int(cut)
    if not 1 <= c <= spec.weight_layers - 1:
        raise CutOutOfRange(
            f"cut {c} invalid for {spec.weight_layers} weight layers "
            f"(valid range 1..{spec.weight_layers - 1})"
        )
    return c


def layer_param_counts(spec: ModelSpec) -> tuple[int, ...]:
    """Weights plus biases per layer."""
    w = spec.layer_widths
    return tuple(w[i] * w[i + 1] + w[i + 1] for i in range(spec.weight_layers))


def param_count(spec: ModelSpec) -> int:
    return sum(layer_param_counts(spec))


def client_param_count(spec: ModelSpec, cut: CutPoint | int) -> int:
    c = _cut_index(spec, cut)
    return sum(layer_param_counts(spec)[:c])


def cut_stats(spec: ModelSpec, cut: CutPoint | int) -> tuple[int, Fraction]:
    """Smashed width q and exact client-side parameter fraction eta at the cut."""
    c = _cut_index(spec, cut)
    q = spec.layer_widths[c]
    eta = Fraction(client_param_count(spec, c), param_count(spec))
    return q, eta


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of the splitmix64 stream seeded with ``seed``.

    splitmix64 is counter-based, so the whole block vectorizes: output i is
    the finalizer applied to ``seed + (i+1) * gamma`` mod 2**64.
    """
    if count < 0:
        raise InvalidParam(f"count must be >= 0, got {count}")
    idx = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK64) + idx * np.uint64(_SPLITMIX_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def uniform01(seed: int, count: int) -> np.ndarray:
    """Doubles in [0, 1) from the top 53 bits of the splitmix64 stream."""
    return (splitmix64(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def init_params(spec: ModelSpec, seed: int) -> np.ndarray:
    """Flat parameter vector with every scalar uniform in +-1/sqrt(fan_in)."""
    u = uniform01(seed, param_count(spec))
    out = np.empty_like(u)
    offset = 0
    for i, count in enumerate(layer_param_counts(spec)):
        bound = 1.0 / math.sqrt(spec.layer_widths[i])
        out[offset : offset + count] = (2.0 * u[offset : offset + count] - 1.0) * bound
        offset += count
    return out


def random_dataset(spec: ModelSpec, count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic (inputs, labels) batch, every value uniform in [-1, 1]."""
    if count < 0:
        raise InvalidParam(f"count must be >= 0, got {count}")
    n_x = count * spec.input_width
    n_y = count * spec.output_width
    u = uniform01(seed ^ _DATA_SEED_TWEAK, n_x + n_y)
    values = 2.0 * u - 1.0
    x = values[:n_x].reshape(count, spec.input_width)
    y = values[n_x:].reshape(count, spec.output_width)
    return x, y


def _unpack(widths: Sequence[int], flat: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    flat = np.asarray(flat, dtype=np.float64)
    if flat.ndim != 1:
        raise LengthMismatch(f"parameter vector must be flat, got shape {flat.shape}")
    expected = sum(widths[i] * widths[i + 1] + widths[i + 1] for i in range(len(widths) - 1))
    if flat.size != expected:
        raise LengthMismatch(f"expected {expected} parameters, got {flat.size}")
    layers = []
    offset = 0
    for i in range(len(widths) - 1):
        n_in, n_out = widths[i], widths[i + 1]
        w = flat[offset : offset + n_in * n_out].reshape(n_in, n_out)
        offset += n_in * n_out
        b = flat[offset : offset + n_out]
        offset += n_out
        layers.append((w, b))
    return layers


def unpack_params(spec: ModelSpec, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Flat vector to per-layer (W, b) views."""
    return _unpack(spec.layer_widths, params)


def split_params(spec: ModelSpec, cut: CutPoint | int, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Client-side and server-side halves of a flat parameter vector."""
    c = _cut_index(spec, cut)
    params = np.asarray(params, dtype=np.float64)
    if params.size != param_count(spec):
        raise LengthMismatch(f"expected {param_count(spec)} parameters, got {params.size}")
    n_client = client_param_count(spec, c)
    return params[:n_client].copy(), params[n_client:].copy()


def join_params(client_params: np.ndarray, server_params: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(client_params, dtype=np.float64),
                           np.asarray(server_params, dtype=np.float64)])


def _check_batch(batch, width: int, name: str) -> np.ndarray:
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ShapeMismatch(f"{name} must have shape (records, {width}), got {arr.shape}")
    return arr


def _apply_activation(activation: Activation, z: np.ndarray) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return z
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _activation_deriv(activation: Activation, z: np.ndarray) -> np.ndarray:
    if activation is Activation.IDENTITY:
        return np.ones_like(z)
    if activation is Activation.RELU:
        return (z > 0.0).astype(np.float64)
    s = _apply_activation(Activation.SIGMOID, z)
    return s * (1.0 - s)


def _forward_layers(layers, activation: Activation, batch: np.ndarray, lo: int, top: int):
    """Run layers lo..lo+len(layers)-1; the layer at index top-1 stays linear.

    Returns (pre_activations, activations) with activations[0] = batch.
    """
    zs = []
    acts = [batch]
    a = batch
    for offset, (w, b) in enumerate(layers):
        z = a @ w + b
        zs.append(z)
        a = z if lo + offset == top - 1 else _apply_activation(activation, z)
        acts.append(a)
    return zs, acts


@dataclass
class ForwardTrace:
    """Per-layer activations of a forward pass; activations[0] is the input."""

    activations: list
    pre_activations: list

    @property
    def outputs(self) -> np.ndarray:
        return self.activations[-1]


def forward(spec: ModelSpec, params: np.ndarray, batch) -> ForwardTrace:
    """Full forward pass: affine + activation per hidden layer, linear output."""
    x = _check_batch(batch, spec.input_width, "batch")
    layers = unpack_params(spec, params)
    zs, acts = _forward_layers(layers, spec.activation, x, 0, spec.weight_layers)
    return ForwardTrace(activations=acts, pre_activations=zs)


def _front_trace(spec: ModelSpec, cut: CutPoint | int, client_params: np.ndarray, batch):
    c = _cut_index(spec, cut)
    x = _check_batch(batch, spec.input_width, "batch")
    layers = _unpack(spec.layer_widths[: c + 1], client_params)
    zs, acts = _forward_layers(layers, spec.activation, x, 0, spec.weight_layers)
    return layers, zs, acts


def _back_trace(spec: ModelSpec, cut: CutPoint | int, server_params: np.ndarray, smashed):
    c = _cut_index(spec, cut)
    x = _check_batch(smashed, spec.layer_widths[c], "smashed")
    layers = _unpack(spec.layer_widths[c:], server_params)
    zs, acts = _forward_layers(layers, spec.activation, x, c, spec.weight_layers)
    return layers, zs, acts


def forward_front(spec: ModelSpec, cut: CutPoint | int, client_params: np.ndarray, batch) -> np.ndarray:
    """Client half of the forward pass; returns the smashed activations (records x q)."""
    _, _, acts = _front_trace(spec, cut, client_params, batch)
    return acts[-1]


def forward_back(spec: ModelSpec, cut: CutPoint | int, server_params: np.ndarray, smashed) -> np.ndarray:
    """Server half of the forward pass, from smashed activations to outputs."""
    _, _, acts = _back_trace(spec, cut, server_params, smashed)
    return acts[-1]


def mse_loss(outputs, labels) -> float:
    """Mean squared error over every output element."""
    outputs = np.asarray(outputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if outputs.shape != labels.shape:
        raise ShapeMismatch(f"outputs {outputs.shape} vs labels {labels.shape}")
    return float(np.mean((outputs - labels) ** 2))


def _mse_and_grad(outputs: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    diff = outputs - labels
    loss = float(np.mean(diff**2))
    return loss, (2.0 / diff.size) * diff


def _backward_layers(layers, activation: Activation, zs, acts, upstream: np.ndarray, lo: int, top: int):
    """Reverse pass over a contiguous layer range.

    ``upstream`` is the loss gradient w.r.t. the range's last activation.
    Returns (flat parameter gradients for the range, per-boundary activation
    gradients with index j = d loss / d acts[j]). The layer loop runs top-down
    one layer at a time, so running it split across two adjacent ranges
    produces bit-identical results to one monolithic pass.
    """
    g = upstream
    act_grads: list = [None] * (len(layers) + 1)
    act_grads[-1] = upstream
    parts: list = [None] * len(layers)
    for offset in reversed(range(len(layers))):
        w, _ = layers[offset]
        z = zs[offset]
        dz = g if lo + offset == top - 1 else g * _activation_deriv(activation, z)
        dw = acts[offset].T @ dz
        db = dz.sum(axis=0)
        g = dz @ w.T
        act_grads[offset] = g
        parts[offset] = (dw, db)
    if parts:
        flat = np.concatenate([np.concatenate([dw.ravel(), db]) for dw, db in parts])
    else:
        flat = np.zeros(0, dtype=np.float64)
    return flat, act_grads


@dataclass
class BackwardResult:
    """Loss, flat parameter gradients, and the gradient at every layer boundary.

    ``activation_grads[c]`` is the tensor that would cross a cut at c (records
    x width_c); index 0 is the gradient w.r.t. the input batch.
    """

    loss: float
    param_grads: np.ndarray
    activation_grads: list


def backward(spec: ModelSpec, params: np.ndarray, batch, labels) -> BackwardResult:
    """Exact reverse-mode gradients of the mean squared error."""
    x = _check_batch(batch, spec.input_width, "batch")
    y = _check_batch(labels, spec.output_width, "labels")
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"{x.shape[0]} records but {y.shape[0]} labels")
    layers = unpack_params(spec, params)
    zs, acts = _forward_layers(layers, spec.activation, x, 0, spec.weight_layers)
    loss, dout = _mse_and_grad(acts[-1], y)
    flat, act_grads = _backward_layers(layers, spec.activation, zs, acts, dout, 0, spec.weight_layers)
    return BackwardResult(loss=loss, param_grads=flat, activation_grads=act_grads)


def sgd_step(params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
    """One plain gradient step: params - lr * grads."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise LengthMismatch(f"params {params.shape} vs grads {grads.shape}")
    return params - lr * grads


def average_params(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise arithmetic mean of equally sized flat vectors.

    Computed centered on the first vector so that averaging k identical
    vectors returns them bit-exactly.
    """
    if len(vectors) == 0:
        raise EmptyList("cannot average zero parameter vectors")
    arrays = [np.asarray(v, dtype=np.float64) for v in vectors]
    size = arrays[0].size
    if any(a.ndim != 1 or a.size != size for a in arrays):
        raise LengthMismatch("parameter vectors differ in length")
    stack = np.stack(arrays)
    base = stack[0]
    return base + (stack - base).sum(axis=0) / len(arrays)

"""Dense and LSTM layer primitives with hand-derived backward passes.

All math is float64 numpy. Forward passes are pure functions of
(parameters, input); backward passes consume the explicit caches returned
by the forward calls, never hidden state. Gradients are verified against
central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ShapeError

ACTIVATIONS = ("tanh", "identity")

# gate order within concatenated LSTM weight blocks
_GATES = ("input", "forget", "cell", "output")


def as_matrix(x, name: str = "input") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass
class DenseLayer:
    """Fully connected layer: out = act(x @ weights + bias)."""

    weights: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str = "tanh"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("weights must be 2-D and bias 1-D")
        if self.bias.shape[0] != self.weights.shape[1]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != out_dim {self.weights.shape[1]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]


def init_dense(rng: np.random.Generator, in_dim: int, out_dim: int,
               activation: str = "tanh") -> DenseLayer:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] for weights and bias."""
    bound = 1.0 / np.sqrt(in_dim)
    w = rng.uniform(-bound, bound, size=(in_dim, out_dim))
    b = rng.uniform(-bound, bound, size=out_dim)
    return DenseLayer(w, b, activation)


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    if x.ndim != 2 or x.shape[1] != layer.in_dim:
        raise ShapeError(
            f"input has shape {x.shape}, layer expects (*, {layer.in_dim})"
        )
    pre = x @ layer.weights + layer.bias
    if layer.activation == "tanh":
        return np.tanh(pre)
    return pre


def dense_backward(layer: DenseLayer, cached_input: np.ndarray,
                   grad_out: np.ndarray):
    """Gradients for one dense layer.

    cached_input is the forward input; the pre-activation is recomputed
    here rather than cached. Returns (grad_input, grad_weights, grad_bias).
    """
    if cached_input.shape[1] != layer.in_dim:
        raise ShapeError(f"cached input shape {cached_input.shape} mismatches layer")
    if grad_out.shape != (cached_input.shape[0], layer.out_dim):
        raise ShapeError(
            f"grad_out shape {grad_out.shape} != ({cached_input.shape[0]}, {layer.out_dim})"
        )
    if layer.activation == "tanh":
        out = np.tanh(cached_input @ layer.weights + layer.bias)
        grad_pre = grad_out * (1.0 - out * out)
    else:
        grad_pre = grad_out
    grad_w = cached_input.T @ grad_pre
    grad_b = grad_pre.sum(axis=0)
    grad_in = grad_pre @ layer.weights.T
    return grad_in, grad_w, grad_b


class DenseStack:
    """A sequence of dense layers applied in order."""

    def __init__(self, layers: list[DenseLayer]):
        for a, b in zip(layers, layers[1:]):
            if a.out_dim != b.in_dim:
                raise ShapeError(
                    f"layer widths do not chain: {a.out_dim} -> {b.in_dim}"
                )
        self.layers = layers

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def forward(self, x: np.ndarray):
        cache = []
        for layer in self.layers:
            cache.append(x)
            x = dense_forward(layer, x)
        return x, cache

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray):
        """Returns (grad_input, grads) with grads aligned to params()."""
        grads: list[np.ndarray | None] = [None] * (2 * len(self.layers))
        for k in range(len(self.layers) - 1, -1, -1):
            grad_out, gw, gb = dense_backward(self.layers[k], cache[k], grad_out)
            grads[2 * k] = gw
            grads[2 * k + 1] = gb
        return grad_out, grads

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out

    def param_names(self) -> list[str]:
        out = []
        for k in range(len(self.layers)):
            out.append(f"layer{k}.w")
            out.append(f"layer{k}.b")
        return out


@dataclass
class LstmCell:
    """Single LSTM cell over [input, hidden] concatenation.

    weights: (input_dim + hidden_dim, 4*hidden_dim), bias: (4*hidden_dim,),
    gate order input, forget, cell-candidate, output. Sigmoid gates, tanh
    candidate and cell output.
    """

    input_dim: int
    hidden_dim: int
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        expect = (self.input_dim + self.hidden_dim, 4 * self.hidden_dim)
        if self.weights.shape != expect:
            raise ShapeError(f"lstm weights shape {self.weights.shape} != {expect}")
        if self.bias.shape != (4 * self.hidden_dim,):
            raise ShapeError(f"lstm bias shape {self.bias.shape} != ({4 * self.hidden_dim},)")


def init_lstm(rng: np.random.Generator, input_dim: int, hidden_dim: int) -> LstmCell:
    """Uniform weight init over the concatenated width; forget-gate bias 1.0."""
    bound = 1.0 / np.sqrt(input_dim + hidden_dim)
    w = rng.uniform(-bound, bound, size=(input_dim + hidden_dim, 4 * hidden_dim))
    b = np.zeros(4 * hidden_dim)
    b[hidden_dim:2 * hidden_dim] = 1.0  # forget gate starts open
    return LstmCell(input_dim, hidden_dim, w, b)


def lstm_forward(cell: LstmCell, x_seq: np.ndarray, h0: np.ndarray, c0: np.ndarray):
    """Run the cell over a (T, B, input_dim) sequence.

    Returns (hidden_states, cache) where hidden_states is (T, B, hidden_dim)
    and cache feeds lstm_backward.
    """
    if x_seq.ndim != 3 or x_seq.shape[2] != cell.input_dim:
        raise ShapeError(
            f"sequence shape {x_seq.shape} incompatible with input_dim {cell.input_dim}"
        )
    T, B, _ = x_seq.shape
    if T == 0:
        raise ValueError("empty sequence")
    H = cell.hidden_dim
    if h0.shape != (B, H) or c0.shape != (B, H):
        raise ShapeError("h0/c0 must have shape (batch, hidden_dim)")

    hs = np.empty((T + 1, B, H))
    cs = np.empty((T + 1, B, H))
    hs[0], cs[0] = h0, c0
    gates = np.empty((T, B, 4 * H))
    tanh_c = np.empty((T, B, H))

    for t in range(T):
        concat = np.concatenate([x_seq[t], hs[t]], axis=1)
        pre = concat @ cell.weights + cell.bias
        i = expit(pre[:, :H])
        f = expit(pre[:, H:2 * H])
        g = np.tanh(pre[:, 2 * H:3 * H])
        o = expit(pre[:, 3 * H:])
        cs[t + 1] = f * cs[t] + i * g
        tanh_c[t] = np.tanh(cs[t + 1])
        hs[t + 1] = o * tanh_c[t]
        gates[t, :, :H] = i
        gates[t, :, H:2 * H] = f
        gates[t, :, 2 * H:3 * H] = g
        gates[t, :, 3 * H:] = o

    cache = {"x_seq": x_seq, "hs": hs, "cs": cs, "gates": gates, "tanh_c": tanh_c,
             "shape": (T, B, H, cell.input_dim)}
    return hs[1:], cache


def lstm_backward(cell: LstmCell, cache: dict, grad_hidden: np.ndarray):
    """Backprop through time for one cell.

    grad_hidden holds the upstream gradient on every hidden state,
    shape (T, B, hidden_dim); steps without upstream signal carry zeros.
    Returns (grad_x_seq, grad_weights, grad_bias, grad_h0, grad_c0).
    """
    T, B, H, D = cache["shape"]
    if cell.input_dim != D or cell.hidden_dim != H:
        raise ValueError("cache does not belong to this cell")
    if grad_hidden.shape != (T, B, H):
        raise ShapeError(f"grad_hidden shape {grad_hidden.shape} != {(T, B, H)}")

    x_seq, hs, cs = cache["x_seq"], cache["hs"], cache["cs"]
    gates, tanh_c = cache["gates"], cache["tanh_c"]

    grad_w = np.zeros_like(cell.weights)
    grad_b = np.zeros_like(cell.bias)
    grad_x = np.zeros_like(x_seq)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))

    for t in range(T - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H:2 * H]
        g = gates[t, :, 2 * H:3 * H]
        o = gates[t, :, 3 * H:]
        tc = tanh_c[t]

        dh = grad_hidden[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * cs[t]
        dg = dc * i
        dc_next = dc * f

        dpre = np.empty((B, 4 * H))
        dpre[:, :H] = di * i * (1.0 - i)
        dpre[:, H:2 * H] = df * f * (1.0 - f)
        dpre[:, 2 * H:3 * H] = dg * (1.0 - g * g)
        dpre[:, 3 * H:] = do * o * (1.0 - o)

        concat = np.concatenate([x_seq[t], hs[t]], axis=1)
        grad_w += concat.T @ dpre
        grad_b += dpre.sum(axis=0)
        dconcat = dpre @ cell.weights.T
        grad_x[t] = dconcat[:, :D]
        dh_next = dconcat[:, D:]

    return grad_x, grad_w, grad_b, dh_next, dc_next

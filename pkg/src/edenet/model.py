"""Encoder-decoder-encoder base learner.

An EdeNet maps a sample x through a first encoder to a latent z, decodes
z back to a reconstruction, and re-encodes the reconstruction with a
second encoder of identical structure but independent parameters. The
training loss combines the input-space reconstruction error and the
latent-space encoding error; the encoding error alone is the anomaly
score.

Both encoder kinds are supported: a three-dense-layer stack (Tanh hidden
layers, identity output) and a stacked-LSTM variant that chops a flat
feature row into a short sequence of equal chunks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DegenerateWeightsError, ShapeError
from .layers import (
    DenseLayer,
    DenseStack,
    LstmCell,
    as_matrix,
    init_dense,
    init_lstm,
    lstm_backward,
    lstm_forward,
)

ENCODER_KINDS = ("feedforward", "lstm")


def default_latent_dim(input_dim: int) -> int:
    return max(1, input_dim // 4)


def make_arch(input_dim: int, overrides: dict | None = None) -> "ArchSpec":
    """ArchSpec for a known feature width, with optional field overrides."""
    fields = dict(overrides or {})
    unknown = set(fields) - set(ArchSpec.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown arch fields: {sorted(unknown)}")
    fields.setdefault("input_dim", input_dim)
    fields.setdefault("latent_dim", default_latent_dim(fields["input_dim"]))
    return ArchSpec(**fields)


@dataclass(frozen=True)
class ArchSpec:
    """Architecture descriptor shared by all members of an ensemble.

    hidden_sizes gives the two hidden widths of each feedforward stack;
    together with the stack output that makes three fully connected layers
    per encoder/decoder. The LSTM fields describe the recurrent variant:
    a d-feature row becomes seq_len timesteps of ceil(d/seq_len) features
    (zero-padded at the tail).
    """

    input_dim: int
    latent_dim: int
    encoder_kind: str = "feedforward"
    hidden_sizes: tuple[int, int] = (64, 32)
    recurrent_layers: int = 1
    hidden_dim: int = 32
    seq_len: int = 1
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        if not 1 <= self.latent_dim <= self.input_dim:
            raise ValueError(
                f"latent_dim must lie in [1, input_dim], got {self.latent_dim}"
            )
        if self.encoder_kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder_kind {self.encoder_kind!r}")
        if len(self.hidden_sizes) != 2 or min(self.hidden_sizes) < 1:
            raise ValueError("hidden_sizes must be two positive widths")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if self.alpha + self.beta <= 0:
            raise ValueError("alpha + beta must be positive")
        if self.encoder_kind == "lstm":
            if self.recurrent_layers < 1 or self.hidden_dim < 1 or self.seq_len < 1:
                raise ValueError("lstm fields must be >= 1")

    @property
    def chunk_size(self) -> int:
        return math.ceil(self.input_dim / self.seq_len)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "latent_dim": self.latent_dim,
            "encoder_kind": self.encoder_kind,
            "hidden_sizes": list(self.hidden_sizes),
            "recurrent_layers": self.recurrent_layers,
            "hidden_dim": self.hidden_dim,
            "seq_len": self.seq_len,
            "alpha": self.alpha,
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchSpec":
        return cls(
            input_dim=int(d["input_dim"]),
            latent_dim=int(d["latent_dim"]),
            encoder_kind=str(d.get("encoder_kind", "feedforward")),
            hidden_sizes=tuple(d.get("hidden_sizes", (64, 32))),
            recurrent_layers=int(d.get("recurrent_layers", 1)),
            hidden_dim=int(d.get("hidden_dim", 32)),
            seq_len=int(d.get("seq_len", 1)),
            alpha=float(d.get("alpha", 1.0)),
            beta=float(d.get("beta", 1.0)),
        )


# ---------------------------------------------------------------------------
# LSTM encoder/decoder assembly


def _row_to_sequence(x: np.ndarray, seq_len: int, chunk: int) -> np.ndarray:
    """(B, d) -> (T, B, chunk), zero-padding the tail chunk."""
    B, d = x.shape
    padded = np.zeros((B, seq_len * chunk))
    padded[:, :d] = x
    return padded.reshape(B, seq_len, chunk).transpose(1, 0, 2)


def _sequence_to_row(seq: np.ndarray, d: int) -> np.ndarray:
    """(T, B, chunk) -> (B, d), dropping pad columns."""
    T, B, chunk = seq.shape
    return seq.transpose(1, 0, 2).reshape(B, T * chunk)[:, :d]


class LstmEncoder:
    """Stacked LSTM over the chunk sequence; latent is a linear map of the
    final hidden state of the top layer."""

    def __init__(self, cells: list[LstmCell], proj: DenseLayer,
                 input_dim: int, seq_len: int):
        self.cells = cells
        self.proj = proj  # identity activation, hidden_dim -> latent_dim
        self.input_dim = input_dim
        self.seq_len = seq_len
        self.chunk = cells[0].input_dim

    def forward(self, x: np.ndarray):
        seq = _row_to_sequence(x, self.seq_len, self.chunk)
        B = x.shape[0]
        caches = []
        for cell in self.cells:
            zeros = np.zeros((B, cell.hidden_dim))
            seq, cache = lstm_forward(cell, seq, zeros, zeros)
            caches.append(cache)
        top_last = seq[-1]
        z = top_last @ self.proj.weights + self.proj.bias
        return z, {"cell_caches": caches, "top_last": top_last, "batch": B}

    def backward(self, cache: dict, grad_out: np.ndarray):
        B = cache["batch"]
        g_proj_w = cache["top_last"].T @ grad_out
        g_proj_b = grad_out.sum(axis=0)

        T = self.seq_len
        H = self.cells[-1].hidden_dim
        dh = np.zeros((T, B, H))
        dh[-1] = grad_out @ self.proj.weights.T

        cell_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.cells)
        for k in range(len(self.cells) - 1, -1, -1):
            dx_seq, gw, gb, _, _ = lstm_backward(self.cells[k], cache["cell_caches"][k], dh)
            cell_grads[k] = (gw, gb)
            dh = dx_seq

        grad_x = _sequence_to_row(dh, self.input_dim)
        grads: list[np.ndarray] = []
        for gw, gb in cell_grads:
            grads.extend([gw, gb])
        grads.extend([g_proj_w, g_proj_b])
        return grad_x, grads

    def params(self) -> list[np.ndarray]:
        out = []
        for cell in self.cells:
            out.extend([cell.weights, cell.bias])
        out.extend([self.proj.weights, self.proj.bias])
        return out

    def param_names(self) -> list[str]:
        out = []
        for k in range(len(self.cells)):
            out.extend([f"cell{k}.w", f"cell{k}.b"])
        out.extend(["proj.w", "proj.b"])
        return out


class LstmDecoder:
    """Feeds the latent vector as input at every timestep and linearly
    projects each hidden state back to one feature chunk."""

    def __init__(self, cells: list[LstmCell], out: DenseLayer,
                 output_dim: int, seq_len: int):
        self.cells = cells
        self.out = out  # identity activation, hidden_dim -> chunk
        self.output_dim = output_dim
        self.seq_len = seq_len
        self.chunk = out.out_dim

    def forward(self, z: np.ndarray):
        B = z.shape[0]
        seq = np.repeat(z[None, :, :], self.seq_len, axis=0)
        caches = []
        for cell in self.cells:
            zeros = np.zeros((B, cell.hidden_dim))
            seq, cache = lstm_forward(cell, seq, zeros, zeros)
            caches.append(cache)
        chunks = seq @ self.out.weights + self.out.bias  # (T, B, chunk)
        x_recon = _sequence_to_row(chunks, self.output_dim)
        return x_recon, {"cell_caches": caches, "top_hidden": seq, "batch": B}

    def backward(self, cache: dict, grad_out: np.ndarray):
        B = cache["batch"]
        T, chunk = self.seq_len, self.chunk
        padded = np.zeros((B, T * chunk))
        padded[:, :self.output_dim] = grad_out
        dchunks = padded.reshape(B, T, chunk).transpose(1, 0, 2)

        top_hidden = cache["top_hidden"]
        g_out_w = np.einsum("tbh,tbk->hk", top_hidden, dchunks)
        g_out_b = dchunks.sum(axis=(0, 1))
        dh = dchunks @ self.out.weights.T

        cell_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.cells)
        for k in range(len(self.cells) - 1, -1, -1):
            dx_seq, gw, gb, _, _ = lstm_backward(self.cells[k], cache["cell_caches"][k], dh)
            cell_grads[k] = (gw, gb)
            dh = dx_seq

        grad_z = dh.sum(axis=0)  # same latent fed at every step
        grads: list[np.ndarray] = []
        for gw, gb in cell_grads:
            grads.extend([gw, gb])
        grads.extend([g_out_w, g_out_b])
        return grad_z, grads

    def params(self) -> list[np.ndarray]:
        out = []
        for cell in self.cells:
            out.extend([cell.weights, cell.bias])
        out.extend([self.out.weights, self.out.bias])
        return out

    def param_names(self) -> list[str]:
        out = []
        for k in range(len(self.cells)):
            out.extend([f"cell{k}.w", f"cell{k}.b"])
        out.extend(["out.w", "out.b"])
        return out


# ---------------------------------------------------------------------------
# the EDE net


def _build_encoder(spec: ArchSpec, rng: np.random.Generator):
    if spec.encoder_kind == "feedforward":
        h1, h2 = spec.hidden_sizes
        return DenseStack([
            init_dense(rng, spec.input_dim, h1, "tanh"),
            init_dense(rng, h1, h2, "tanh"),
            init_dense(rng, h2, spec.latent_dim, "identity"),
        ])
    cells = [init_lstm(rng, spec.chunk_size, spec.hidden_dim)]
    for _ in range(spec.recurrent_layers - 1):
        cells.append(init_lstm(rng, spec.hidden_dim, spec.hidden_dim))
    proj = init_dense(rng, spec.hidden_dim, spec.latent_dim, "identity")
    return LstmEncoder(cells, proj, spec.input_dim, spec.seq_len)


def _build_decoder(spec: ArchSpec, rng: np.random.Generator):
    if spec.encoder_kind == "feedforward":
        h1, h2 = spec.hidden_sizes
        return DenseStack([
            init_dense(rng, spec.latent_dim, h2, "tanh"),
            init_dense(rng, h2, h1, "tanh"),
            init_dense(rng, h1, spec.input_dim, "identity"),
        ])
    cells = [init_lstm(rng, spec.latent_dim, spec.hidden_dim)]
    for _ in range(spec.recurrent_layers - 1):
        cells.append(init_lstm(rng, spec.hidden_dim, spec.hidden_dim))
    out = init_dense(rng, spec.hidden_dim, spec.chunk_size, "identity")
    return LstmDecoder(cells, out, spec.input_dim, spec.seq_len)


class EdeNet:
    """One encoder-decoder-encoder learner.

    The second encoder shares the first encoder's structure but never its
    parameter arrays.
    """

    def __init__(self, spec: ArchSpec, e1, dec, e2):
        self.spec = spec
        self.e1 = e1
        self.dec = dec
        self.e2 = e2
        for a, b in zip(self.e1.params(), self.e2.params()):
            if a is b:
                raise ValueError("e1 and e2 must not alias parameters")

    @classmethod
    def initialize(cls, spec: ArchSpec, rng: np.random.Generator) -> "EdeNet":
        return cls(spec, _build_encoder(spec, rng), _build_decoder(spec, rng),
                   _build_encoder(spec, rng))

    def forward(self, x: np.ndarray):
        """Returns (z, x_recon, z_prime) for a (B, input_dim) batch."""
        x = as_matrix(x)
        if x.shape[1] != self.spec.input_dim:
            raise ShapeError(
                f"input has {x.shape[1]} columns, model expects {self.spec.input_dim}"
            )
        z, _ = self.e1.forward(x)
        x_recon, _ = self.dec.forward(z)
        z_prime, _ = self.e2.forward(x_recon)
        return z, x_recon, z_prime

    def _forward_cached(self, x: np.ndarray):
        z, c1 = self.e1.forward(x)
        x_recon, cd = self.dec.forward(z)
        z_prime, c2 = self.e2.forward(x_recon)
        return z, x_recon, z_prime, (c1, cd, c2)

    def _backward(self, caches, grad_z_direct, grad_xr_direct, grad_zp):
        """Chain rule over the full composition.

        The second encoder only ever sees grad_zp; the decoder and first
        encoder accumulate both the reconstruction-path and the
        encoding-path contributions.
        """
        c1, cd, c2 = caches
        grad_xr_from_e2, g_e2 = self.e2.backward(c2, grad_zp)
        grad_z_from_dec, g_dec = self.dec.backward(cd, grad_xr_from_e2 + grad_xr_direct)
        _, g_e1 = self.e1.backward(c1, grad_z_from_dec + grad_z_direct)
        return g_e1 + g_dec + g_e2

    def params(self) -> list[np.ndarray]:
        return self.e1.params() + self.dec.params() + self.e2.params()

    def param_names(self) -> list[str]:
        return (
            [f"e1.{n}" for n in self.e1.param_names()]
            + [f"dec.{n}" for n in self.dec.param_names()]
            + [f"e2.{n}" for n in self.e2.param_names()]
        )


# ---------------------------------------------------------------------------
# losses and scores


def reconstruction_loss(x: np.ndarray, x_recon: np.ndarray) -> np.ndarray:
    """Per-sample Euclidean distance between input and reconstruction."""
    if x.shape != x_recon.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {x_recon.shape}")
    return np.linalg.norm(x - x_recon, axis=1)


def encoding_loss(z: np.ndarray, z_prime: np.ndarray) -> np.ndarray:
    """Per-sample Euclidean distance between the two latent encodings."""
    if z.shape != z_prime.shape:
        raise ShapeError(f"shape mismatch {z.shape} vs {z_prime.shape}")
    return np.linalg.norm(z - z_prime, axis=1)


def _sample_coefficients(n: int, weights) -> np.ndarray:
    """Per-sample mixing coefficients; uniform weights give the batch mean."""
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ShapeError(f"weights length {w.shape} != batch size {n}")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise DegenerateWeightsError("weight vector sums to zero")
    return w / total


def combined_loss(net: EdeNet, x: np.ndarray, weights=None) -> float:
    """Weighted mean of alpha*L_r + beta*L_e over the batch."""
    loss, _, _, _ = loss_and_grads(net, x, weights, need_grads=False)
    return loss


def loss_and_grads(net: EdeNet, x: np.ndarray, weights=None, need_grads=True):
    """Combined loss plus its gradients w.r.t. every net parameter.

    Returns (combined, mean_lr, mean_le, grads); mean_lr / mean_le are the
    same per-sample mixes used in the combined value, so
    combined == alpha*mean_lr + beta*mean_le always holds. The Euclidean
    norm's gradient is taken as 0 at exactly-zero error.
    """
    x = as_matrix(x)
    if x.shape[1] != net.spec.input_dim:
        raise ShapeError(
            f"input has {x.shape[1]} columns, model expects {net.spec.input_dim}"
        )
    alpha, beta = net.spec.alpha, net.spec.beta
    coeff = _sample_coefficients(x.shape[0], weights)

    z, x_recon, z_prime, caches = net._forward_cached(x)
    lr = reconstruction_loss(x, x_recon)
    le = encoding_loss(z, z_prime)
    mean_lr = float(coeff @ lr)
    mean_le = float(coeff @ le)
    combined = alpha * mean_lr + beta * mean_le
    if not need_grads:
        return combined, mean_lr, mean_le, None

    with np.errstate(invalid="ignore", divide="ignore"):
        unit_r = np.where(lr[:, None] > 0, (x_recon - x) / lr[:, None], 0.0)
        unit_e = np.where(le[:, None] > 0, (z_prime - z) / le[:, None], 0.0)
    grad_xr_direct = alpha * coeff[:, None] * unit_r
    grad_zp = beta * coeff[:, None] * unit_e
    grad_z_direct = -grad_zp

    grads = net._backward(caches, grad_z_direct, grad_xr_direct, grad_zp)
    return combined, mean_lr, mean_le, grads


def anomaly_score(net: EdeNet, x: np.ndarray) -> np.ndarray:
    """Latent-gap score per sample; identical to encoding_loss on forward
    outputs."""
    z, _, z_prime = net.forward(x)
    return encoding_loss(z, z_prime)


def normalize_scores(raw: np.ndarray) -> np.ndarray:
    """Min-max map onto [0, 1]; an all-equal vector maps to all zeros."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size == 0:
        raise ValueError("raw scores must be a nonempty 1-D array")
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


@dataclass
class ScoreVector:
    """Raw anomaly scores with an optional normalized companion."""

    raw: np.ndarray
    normalized: np.ndarray | None = None

    def with_normalized(self) -> "ScoreVector":
        return replace(self, normalized=normalize_scores(self.raw))


# ---------------------------------------------------------------------------
# payload helpers used by the model-file reader/writer


def net_to_payload(net: EdeNet) -> dict:
    return {
        name: p.tolist() for name, p in zip(net.param_names(), net.params())
    }


def net_from_payload(spec: ArchSpec, payload: dict) -> EdeNet:
    from .errors import FormatError

    net = EdeNet.initialize(spec, np.random.default_rng(0))
    names = net.param_names()
    if set(payload) != set(names):
        missing = set(names) - set(payload)
        extra = set(payload) - set(names)
        raise FormatError(f"parameter names mismatch (missing={sorted(missing)}, "
                          f"unexpected={sorted(extra)})")
    for name, param in zip(names, net.params()):
        arr = np.asarray(payload[name], dtype=np.float64)
        if arr.shape != param.shape:
            raise FormatError(
                f"parameter {name} has shape {arr.shape}, expected {param.shape}"
            )
        param[...] = arr
    return net

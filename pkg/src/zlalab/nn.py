"""Single-layer LSTM cell and softmax helpers, float64 with exact gradients.

Weight matrices are stored (out, in), so the fan-in of any matrix is its
final axis, and initialization draws every entry uniformly from
[-1/sqrt(fan_in), +1/sqrt(fan_in)]. Biases start at zero (no forget-gate
offset). The packed gate axis is ordered (input, forget, candidate, output).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit as sigmoid


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / math.sqrt(shape[-1])
    return rng.uniform(-bound, bound, size=shape)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


@dataclass
class LstmWeights:
    w_x: np.ndarray  # (4h, e)
    w_h: np.ndarray  # (4h, h)
    b: np.ndarray    # (4h,)

    @property
    def hidden(self) -> int:
        return self.w_h.shape[1]

    @property
    def input_dim(self) -> int:
        return self.w_x.shape[1]


def init_lstm(input_dim: int, hidden: int, rng: np.random.Generator) -> LstmWeights:
    return LstmWeights(
        w_x=uniform_init(rng, (4 * hidden, input_dim)),
        w_h=uniform_init(rng, (4 * hidden, hidden)),
        b=np.zeros(4 * hidden),
    )


def lstm_step(w: LstmWeights, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray):
    """One batched cell update; returns (h, c, cache) with cache for backward."""
    hid = w.hidden
    z = x @ w.w_x.T + h_prev @ w.w_h.T + w.b
    gate_i = sigmoid(z[:, :hid])
    gate_f = sigmoid(z[:, hid:2 * hid])
    gate_g = np.tanh(z[:, 2 * hid:3 * hid])
    gate_o = sigmoid(z[:, 3 * hid:])
    c = gate_f * c_prev + gate_i * gate_g
    tanh_c = np.tanh(c)
    h = gate_o * tanh_c
    cache = (x, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, tanh_c)
    return h, c, cache


def lstm_step_backward(
    w: LstmWeights,
    cache,
    dh: np.ndarray,
    dc: np.ndarray,
    gw_x: np.ndarray,
    gw_h: np.ndarray,
    gb: np.ndarray,
):
    """Reverse one cell update, accumulating weight gradients in place.

    Returns (dx, dh_prev, dc_prev).
    """
    x, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, tanh_c = cache
    hid = w.hidden
    d_o = dh * tanh_c
    dc_total = dc + dh * gate_o * (1.0 - tanh_c * tanh_c)
    dc_prev = dc_total * gate_f
    dz = np.empty((dh.shape[0], 4 * hid))
    np.multiply(dc_total * gate_g, gate_i * (1.0 - gate_i), out=dz[:, :hid])
    np.multiply(dc_total * c_prev, gate_f * (1.0 - gate_f), out=dz[:, hid:2 * hid])
    np.multiply(dc_total * gate_i, 1.0 - gate_g * gate_g, out=dz[:, 2 * hid:3 * hid])
    np.multiply(d_o, gate_o * (1.0 - gate_o), out=dz[:, 3 * hid:])
    gw_x += dz.T @ x
    gw_h += dz.T @ h_prev
    gb += dz.sum(axis=0)
    dx = dz @ w.w_x
    dh_prev = dz @ w.w_h
    return dx, dh_prev, dc_prev

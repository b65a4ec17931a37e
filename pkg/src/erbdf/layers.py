"""Per-frame inference primitives: convolutions, grouped linears, GRU.

Activations are [channel, freq] slices of the [channel][time][freq] stream;
temporal context exists only in the input-layer causal convolutions (which
keep kernel_time - 1 past frames) and the GRU hidden state. All math is
float32.
"""

import numpy as np


def relu(x):
    return np.maximum(x, 0.0)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class ShapeError(ValueError):
    """Tensor shape does not match the layer contract."""


# ---------------------------------------------------------------------------
# Convolutions
# ---------------------------------------------------------------------------


class ConvState:
    """History of the prior (kernel_time - 1) input frames, zero-initialized."""

    def __init__(self, in_ch: int, n_freq: int, kernel_time: int):
        self.frames = np.zeros((kernel_time - 1, in_ch, n_freq),
                               dtype=np.float32)

    def reset(self):
        self.frames[:] = 0.0

    def stacked(self, current: np.ndarray) -> np.ndarray:
        """[in_ch, kernel_time, freq] view with the current frame last."""
        hist = np.concatenate([self.frames, current[None]], axis=0)
        return hist.transpose(1, 0, 2)

    def push(self, current: np.ndarray):
        if len(self.frames) == 0:
            return
        self.frames[:-1] = self.frames[1:]
        self.frames[-1] = current


def _freq_patches(x: np.ndarray, kf: int, stride: int) -> np.ndarray:
    """im2col over the last axis with symmetric zero padding (same-size
    before stride). x: [..., freq] -> [..., out_freq, kf]."""
    pad = (kf - 1) // 2
    shape = x.shape[:-1] + (x.shape[-1] + 2 * pad,)
    padded = np.zeros(shape, dtype=x.dtype)
    padded[..., pad:pad + x.shape[-1]] = x
    windows = np.lib.stride_tricks.sliding_window_view(padded, kf, axis=-1)
    return windows[..., ::stride, :]


def conv_frame(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
               stride: int = 1, state: ConvState | None = None,
               name: str = "conv") -> np.ndarray:
    """One frame of a causal conv. weight: [out_ch, in_ch, kt, kf].

    For kt > 1 the state supplies the past frames; the call also advances
    the state. Frequency is padded symmetrically, time only from the past.
    """
    out_ch, in_ch, kt, kf = weight.shape
    if x.shape[0] != in_ch:
        raise ShapeError(f"{name}: expected {in_ch} input channels, "
                         f"got {x.shape[0]}")
    if kt > 1:
        if state is None:
            raise ShapeError(f"{name}: causal kernel needs a ConvState")
        stacked = state.stacked(x)          # [in_ch, kt, freq]
        state.push(x)
    else:
        stacked = x[:, None, :]
    patches = _freq_patches(stacked, kf, stride)   # [in_ch, kt, out_f, kf]
    patches = patches.transpose(2, 0, 1, 3).reshape(patches.shape[2], -1)
    flat_w = weight.reshape(out_ch, -1)
    return (patches @ flat_w.T + bias).T.astype(np.float32)


def depthwise_conv_frame(x: np.ndarray, weight: np.ndarray,
                         bias: np.ndarray, name: str = "pconv") -> np.ndarray:
    """Per-channel 1xK frequency conv. weight: [ch, 1, 1, kf]."""
    ch, _, _, kf = weight.shape
    if x.shape[0] != ch:
        raise ShapeError(f"{name}: expected {ch} channels, got {x.shape[0]}")
    patches = _freq_patches(x, kf, 1)                       # [ch, out_f, kf]
    out = np.einsum("cfk,ck->cf", patches, weight[:, 0, 0, :])
    return (out + bias[:, None]).astype(np.float32)


def tconv_frame(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                stride: int = 2, name: str = "tconv") -> np.ndarray:
    """Transposed 1xK conv doubling the frequency axis.

    weight: [out_ch, in_ch, 1, kf]; output position stride*i + q - 1
    accumulates weight[..., q] * x[:, i] (edges dropped), giving an output
    of exactly stride * in_freq bins for kf = 3.
    """
    out_ch, in_ch, _, kf = weight.shape
    if x.shape[0] != in_ch:
        raise ShapeError(f"{name}: expected {in_ch} input channels, "
                         f"got {x.shape[0]}")
    n_in = x.shape[1]
    n_out = stride * n_in
    out = np.zeros((out_ch, n_out), dtype=np.float64)
    contrib = np.einsum("oiq,if->oqf", weight[:, :, 0, :], x)
    for q in range(kf):
        lo = q - 1
        idx = stride * np.arange(n_in) + lo
        valid = (idx >= 0) & (idx < n_out)
        out[:, idx[valid]] += contrib[:, q, valid]
    return (out + bias[:, None]).astype(np.float32)


# ---------------------------------------------------------------------------
# Grouped linear
# ---------------------------------------------------------------------------


def grouped_linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray,
                   name: str = "glinear") -> np.ndarray:
    """Split the input into contiguous chunks, one dense map per chunk.

    weight: [groups, out_per_group, in_per_group]; groups=1 is an ordinary
    dense layer.
    """
    groups, out_pg, in_pg = weight.shape
    if x.shape[-1] != groups * in_pg:
        raise ShapeError(f"{name}: input dim {x.shape[-1]} not divisible "
                         f"into {groups} groups of {in_pg}")
    chunks = x.reshape(groups, in_pg)
    out = np.einsum("goi,gi->go", weight, chunks).reshape(groups * out_pg)
    return (out + bias).astype(np.float32)


# ---------------------------------------------------------------------------
# GRU
# ---------------------------------------------------------------------------


def gru_step(hidden: np.ndarray, x: np.ndarray, w_ih: np.ndarray,
             w_hh: np.ndarray, b_ih: np.ndarray, b_hh: np.ndarray):
    """One step of a standard GRU cell; gate layout is (reset, update,
    candidate) stacked along the first axis of the weight matrices.

    Returns (output, new_hidden); output is the new hidden state.
    """
    h_dim = hidden.shape[0]
    if w_ih.shape != (3 * h_dim, x.shape[0]) or w_hh.shape != (3 * h_dim, h_dim):
        raise ShapeError(
            f"gru: weight shapes {w_ih.shape}/{w_hh.shape} do not match "
            f"input {x.shape[0]} and hidden {h_dim}")
    gi = w_ih @ x + b_ih
    gh = w_hh @ hidden + b_hh
    r = sigmoid(gi[:h_dim] + gh[:h_dim])
    z = sigmoid(gi[h_dim:2 * h_dim] + gh[h_dim:2 * h_dim])
    n = np.tanh(gi[2 * h_dim:] + r * gh[2 * h_dim:])
    h_new = ((1.0 - z) * n + z * hidden).astype(np.float32)
    return h_new, h_new

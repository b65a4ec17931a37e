"""Network architecture: unified encoder, band-gain decoder, tap decoder.

The layer table built by `architecture()` is the single source of truth
for tensor shapes, weight-file validation, and complexity accounting.
Only the two input convolutions carry temporal context (causal 3x3);
everything after them is 1x3 over frequency, so per-stream state is two
frames of conv history plus the GRU hidden vector.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import EngineConfig
from .layers import (
    ConvState,
    ShapeError,
    conv_frame,
    depthwise_conv_frame,
    grouped_linear,
    gru_step,
    relu,
    sigmoid,
    tconv_frame,
)


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the network with resolved shapes."""

    name: str
    kind: str  # conv | tconv | pathway_conv | grouped_linear | gru
    in_ch: int = 0
    out_ch: int = 0
    kernel: tuple = (1, 1)  # (time, freq)
    stride: int = 1
    groups: int = 1
    in_freq: int = 0
    out_freq: int = 0
    in_dim: int = 0
    out_dim: int = 0
    causal_context: int = 0  # past frames held by the layer

    def weight_shapes(self) -> dict:
        """Tensor name suffix -> shape."""
        kt, kf = self.kernel
        if self.kind in ("conv", "tconv"):
            return {"weight": (self.out_ch, self.in_ch, kt, kf),
                    "bias": (self.out_ch,)}
        if self.kind == "pathway_conv":
            return {"weight": (self.out_ch, 1, kt, kf),
                    "bias": (self.out_ch,)}
        if self.kind == "grouped_linear":
            return {"weight": (self.groups, self.out_dim // self.groups,
                               self.in_dim // self.groups),
                    "bias": (self.out_dim,)}
        if self.kind == "gru":
            return {"w_ih": (3 * self.out_dim, self.in_dim),
                    "w_hh": (3 * self.out_dim, self.out_dim),
                    "b_ih": (3 * self.out_dim,),
                    "b_hh": (3 * self.out_dim,)}
        raise ValueError(f"unknown layer kind {self.kind!r}")

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for s in self.weight_shapes().values())

    def macs_per_frame(self) -> int:
        """Multiply-accumulates of the layer's weight math (bias adds not
        counted)."""
        kt, kf = self.kernel
        if self.kind == "conv":
            return self.out_ch * self.out_freq * self.in_ch * kt * kf
        if self.kind == "tconv":
            return self.out_ch * self.in_ch * kf * self.in_freq
        if self.kind == "pathway_conv":
            return self.out_ch * self.out_freq * kf
        if self.kind == "grouped_linear":
            return self.in_dim * self.out_dim // self.groups
        if self.kind == "gru":
            return 3 * (self.in_dim * self.out_dim + self.out_dim ** 2)
        raise ValueError(f"unknown layer kind {self.kind!r}")


def _down(n: int) -> int:
    return (n + 1) // 2


def architecture(cfg: EngineConfig) -> list[LayerSpec]:
    """Resolve the layer table for a config."""
    m = cfg.model
    c = m.conv_channels
    n_df = cfg.df.n_df_bins(cfg.stft)
    order = cfg.df.order

    erb_freqs = [m.n_bands]
    for _ in range(3):
        erb_freqs.append(_down(erb_freqs[-1]))
    df_freqs = [n_df]
    for _ in range(3):
        df_freqs.append(_down(df_freqs[-1]))
    flat = c * (erb_freqs[-1] + df_freqs[-1])

    coef_dim = n_df * 2 * order
    if coef_dim % m.df_out_groups or m.emb_dim % m.df_out_groups:
        raise ShapeError("df_out_groups must divide both the embedding dim "
                         "and the flattened coefficient vector")

    layers = [
        LayerSpec("enc.erb_conv0", "conv", in_ch=1, out_ch=c, kernel=(3, 3),
                  in_freq=erb_freqs[0], out_freq=erb_freqs[0],
                  causal_context=2),
        LayerSpec("enc.erb_conv1", "conv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=erb_freqs[0], out_freq=erb_freqs[1]),
        LayerSpec("enc.erb_conv2", "conv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=erb_freqs[1], out_freq=erb_freqs[2]),
        LayerSpec("enc.erb_conv3", "conv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=erb_freqs[2], out_freq=erb_freqs[3]),
        LayerSpec("enc.df_conv0", "conv", in_ch=2, out_ch=c, kernel=(3, 3),
                  in_freq=df_freqs[0], out_freq=df_freqs[0], causal_context=2),
        LayerSpec("enc.df_conv1", "conv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=df_freqs[0], out_freq=df_freqs[1]),
        LayerSpec("enc.df_conv2", "conv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=df_freqs[1], out_freq=df_freqs[2]),
        LayerSpec("enc.df_conv3", "conv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=df_freqs[2], out_freq=df_freqs[3]),
        LayerSpec("enc.glin", "grouped_linear", groups=m.n_groups,
                  in_dim=flat, out_dim=m.emb_dim),
        LayerSpec("enc.gru", "gru", in_dim=m.emb_dim, out_dim=m.gru_hidden),
        LayerSpec("dec_erb.glin", "grouped_linear", groups=m.n_groups,
                  in_dim=m.gru_hidden, out_dim=c * erb_freqs[3]),
        LayerSpec("dec_erb.pconv3", "pathway_conv", in_ch=c, out_ch=c,
                  kernel=(1, 3), in_freq=erb_freqs[3], out_freq=erb_freqs[3]),
        LayerSpec("dec_erb.tconv2", "tconv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=erb_freqs[3], out_freq=2 * erb_freqs[3]),
        LayerSpec("dec_erb.pconv2", "pathway_conv", in_ch=c, out_ch=c,
                  kernel=(1, 3), in_freq=erb_freqs[2], out_freq=erb_freqs[2]),
        LayerSpec("dec_erb.tconv1", "tconv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=erb_freqs[2], out_freq=2 * erb_freqs[2]),
        LayerSpec("dec_erb.pconv1", "pathway_conv", in_ch=c, out_ch=c,
                  kernel=(1, 3), in_freq=erb_freqs[1], out_freq=erb_freqs[1]),
        LayerSpec("dec_erb.tconv0", "tconv", in_ch=c, out_ch=c, kernel=(1, 3),
                  stride=2, in_freq=erb_freqs[1], out_freq=2 * erb_freqs[1]),
        LayerSpec("dec_erb.pconv0", "pathway_conv", in_ch=c, out_ch=c,
                  kernel=(1, 3), in_freq=erb_freqs[0], out_freq=erb_freqs[0]),
        LayerSpec("dec_erb.out", "conv", in_ch=c, out_ch=1, kernel=(1, 3),
                  in_freq=erb_freqs[0], out_freq=erb_freqs[0]),
        LayerSpec("dec_df.glin", "grouped_linear", groups=m.n_groups,
                  in_dim=m.gru_hidden, out_dim=m.emb_dim),
        LayerSpec("dec_df.out", "grouped_linear", groups=m.df_out_groups,
                  in_dim=m.emb_dim, out_dim=coef_dim),
    ]
    return layers


def tensor_shapes(cfg: EngineConfig) -> dict:
    """Full tensor name -> shape map for a config."""
    shapes = {}
    for spec in architecture(cfg):
        for suffix, shape in spec.weight_shapes().items():
            shapes[f"{spec.name}.{suffix}"] = shape
    return shapes


@dataclass
class Embedding:
    """Per-frame encoder output: the GRU state plus the band-path skip
    activations consumed by the gain decoder."""

    vec: np.ndarray
    erb_skips: list = field(default_factory=list)


class ModelState:
    """Per-stream mutable state: input-conv histories and GRU hidden."""

    def __init__(self, cfg: EngineConfig):
        n_df = cfg.df.n_df_bins(cfg.stft)
        self.erb_conv0 = ConvState(1, cfg.model.n_bands, 3)
        self.df_conv0 = ConvState(2, n_df, 3)
        self.gru_hidden = np.zeros(cfg.model.gru_hidden, dtype=np.float32)

    def reset(self):
        self.erb_conv0.reset()
        self.df_conv0.reset()
        self.gru_hidden[:] = 0.0

    def state_sizes(self) -> dict:
        """Element counts of every retained buffer (for the memory audit)."""
        return {
            "erb_conv0.history": self.erb_conv0.frames.size,
            "df_conv0.history": self.df_conv0.frames.size,
            "gru.hidden": self.gru_hidden.size,
        }


class Model:
    """Stateless network wrapper; per-stream state lives in ModelState."""

    def __init__(self, weights):
        self.cfg: EngineConfig = weights.config
        self.tensors = weights.tensors
        self.specs = {spec.name: spec for spec in architecture(self.cfg)}
        self.n_df_bins = self.cfg.df.n_df_bins(self.cfg.stft)

    def _w(self, layer: str):
        spec = self.specs[layer]
        names = spec.weight_shapes()
        return spec, [self.tensors[f"{layer}.{n}"] for n in names]

    def _conv(self, layer: str, x, state=None):
        spec, (w, b) = self._w(layer)
        return conv_frame(x, w, b, stride=spec.stride, state=state,
                          name=layer)

    def encode(self, state: ModelState, erb_feat: np.ndarray,
               df_feat: np.ndarray) -> Embedding:
        """Fuse normalized band features [B] and complex-as-2ch features
        [2, F_df] into the per-frame embedding."""
        e0 = relu(self._conv("enc.erb_conv0", erb_feat[None].astype(np.float32),
                             state=state.erb_conv0))
        e1 = relu(self._conv("enc.erb_conv1", e0))
        e2 = relu(self._conv("enc.erb_conv2", e1))
        e3 = relu(self._conv("enc.erb_conv3", e2))
        d0 = relu(self._conv("enc.df_conv0", df_feat.astype(np.float32),
                             state=state.df_conv0))
        d1 = relu(self._conv("enc.df_conv1", d0))
        d2 = relu(self._conv("enc.df_conv2", d1))
        d3 = relu(self._conv("enc.df_conv3", d2))

        flat = np.concatenate([e3.ravel(), d3.ravel()])
        _, (w, b) = self._w("enc.glin")
        z = relu(grouped_linear(flat, w, b, name="enc.glin"))
        _, (w_ih, w_hh, b_ih, b_hh) = self._w("enc.gru")
        out, state.gru_hidden = gru_step(state.gru_hidden, z, w_ih, w_hh,
                                         b_ih, b_hh)
        return Embedding(vec=out, erb_skips=[e0, e1, e2, e3])

    def decode_erb(self, emb: Embedding) -> np.ndarray:
        """Band gains in [0, 1]."""
        c = self.cfg.model.conv_channels
        _, (w, b) = self._w("dec_erb.glin")
        x = relu(grouped_linear(emb.vec, w, b, name="dec_erb.glin"))
        x = x.reshape(c, -1)
        s0, s1, s2, s3 = emb.erb_skips

        _, (w, b) = self._w("dec_erb.pconv3")
        x = x + depthwise_conv_frame(s3, w, b, name="dec_erb.pconv3")
        spec, (w, b) = self._w("dec_erb.tconv2")
        x = relu(tconv_frame(x, w, b, stride=spec.stride, name=spec.name))
        _, (pw, pb) = self._w("dec_erb.pconv2")
        x = x + depthwise_conv_frame(s2, pw, pb, name="dec_erb.pconv2")
        spec, (w, b) = self._w("dec_erb.tconv1")
        x = relu(tconv_frame(x, w, b, stride=spec.stride, name=spec.name))
        _, (pw, pb) = self._w("dec_erb.pconv1")
        x = x + depthwise_conv_frame(s1, pw, pb, name="dec_erb.pconv1")
        spec, (w, b) = self._w("dec_erb.tconv0")
        x = relu(tconv_frame(x, w, b, stride=spec.stride, name=spec.name))
        _, (pw, pb) = self._w("dec_erb.pconv0")
        x = x + depthwise_conv_frame(s0, pw, pb, name="dec_erb.pconv0")
        out = self._conv("dec_erb.out", x)
        return sigmoid(out[0]).astype(np.float32)

    def decode_df(self, emb: Embedding) -> np.ndarray:
        """Complex filter taps [order, n_df_bins], unbounded."""
        _, (w, b) = self._w("dec_df.glin")
        x = relu(grouped_linear(emb.vec, w, b, name="dec_df.glin"))
        _, (w, b) = self._w("dec_df.out")
        flat = grouped_linear(x, w, b, name="dec_df.out")
        per_bin = flat.reshape(self.n_df_bins, self.cfg.df.order, 2)
        return (per_bin[..., 0] + 1j * per_bin[..., 1]).T

    def run_clip(self, erb_feats: np.ndarray, df_feats: np.ndarray):
        """Buffered runner: process a whole [T, ...] clip from a fresh state.

        Returns (gains [T, B], coefs [T, order, n_df_bins]).
        """
        state = ModelState(self.cfg)
        gains, coefs = [], []
        for t in range(erb_feats.shape[0]):
            emb = self.encode(state, erb_feats[t], df_feats[t])
            gains.append(self.decode_erb(emb))
            coefs.append(self.decode_df(emb))
        return np.stack(gains), np.stack(coefs)

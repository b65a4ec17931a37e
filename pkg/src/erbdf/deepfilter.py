"""Multi-frame complex filtering of the low band, plus the gain post-filter.

The filter output for frame stamp k - l is computed when frame k arrives:

    Y(k - l, f) = sum_{i=0..N-1} C_k(i, f) * X(k - i, f)   for f < n_df_bins

so the l newest taps look ahead of the output stamp. Bins at and above
n_df_bins pass through the first-stage output Y_G, delayed by the same l
frames so that identity coefficients make the stage a pure l-frame delay.
"""

from dataclasses import dataclass

import numpy as np

from .config import DfConfig, StftConfig
from .dsp import SpectralFrame


@dataclass
class DfCoefSet:
    """Complex filter taps for one frame: coefs[order, n_df_bins]."""

    coefs: np.ndarray

    @classmethod
    def identity(cls, cfg: DfConfig, n_df_bins: int) -> "DfCoefSet":
        """Taps that reduce the filter to a passthrough (tap l = 1, rest 0)."""
        coefs = np.zeros((cfg.order, n_df_bins), dtype=np.complex128)
        coefs[cfg.lookahead, :] = 1.0
        return cls(coefs)


class DfState:
    """Ring of the newest `order` input frames (DF band) plus the Y_G delay
    line that keeps the upper band aligned with the l-frame output stamp."""

    def __init__(self, stft: StftConfig, df: DfConfig):
        self.stft = stft
        self.df = df
        self.n_df_bins = df.n_df_bins(stft)
        # ring[0] is the newest frame X(k), ring[i] is X(k - i)
        self.ring = np.zeros((df.order, self.n_df_bins), dtype=np.complex128)
        self.delay = np.zeros((df.lookahead + 1, stft.n_bins),
                              dtype=np.complex128)
        self.frames_seen = 0

    def push_input(self, frame: SpectralFrame):
        """Record the unenhanced input frame X(k)."""
        if frame.n_bins != self.stft.n_bins:
            raise ValueError(
                f"expected {self.stft.n_bins} bins, got {frame.n_bins}")
        self.ring[1:] = self.ring[:-1]
        self.ring[0] = frame.bins[:self.n_df_bins]
        self.frames_seen += 1


def apply_df(state: DfState, y_g: SpectralFrame, coefs: DfCoefSet,
             cfg: DfConfig) -> SpectralFrame:
    """Filter the DF band and emit the frame for stamp k - l.

    `state` must already hold X(k) (see DfState.push_input); `y_g` is the
    first-stage output for frame k. The stream start is zero-primed, so the
    first l outputs reconstruct leading silence rather than raising.
    """
    n_df = state.n_df_bins
    if coefs.coefs.shape != (cfg.order, n_df):
        raise ValueError(
            f"coefs shape {coefs.coefs.shape} does not match "
            f"(order={cfg.order}, n_df_bins={n_df})")
    if y_g.n_bins != state.stft.n_bins:
        raise ValueError(
            f"expected {state.stft.n_bins} bins, got {y_g.n_bins}")

    state.delay[1:] = state.delay[:-1]
    state.delay[0] = y_g.bins

    out = state.delay[cfg.lookahead].copy()
    out[:n_df] = np.sum(coefs.coefs * state.ring, axis=0)
    return SpectralFrame(bins=out, frame_index=y_g.frame_index - cfg.lookahead)


def post_filter(gains: np.ndarray, beta: float = 0.02) -> np.ndarray:
    """Sine-based reshaping that over-attenuates noisy bands.

    g' = g * sin(pi/2 * g);  g_out = (1 + beta) * g / (1 + beta + g').
    Note the fixed point at 0 and the strong attenuation of g = 1
    (to (1 + beta) / (2 + beta)); the enhancer applies this to the
    first-stage band gains only when explicitly enabled.
    """
    g = np.asarray(gains, dtype=np.float64)
    if beta < 0:
        raise ValueError("beta must be >= 0")
    g_sin = g * np.sin(np.pi / 2.0 * g)
    return (1.0 + beta) * g / (1.0 + beta + g_sin)

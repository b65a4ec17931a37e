"""Streaming STFT analysis and overlap-add synthesis with fixed latency.

Conventions, pinned so downstream numbers are reproducible:

* Window: periodic square-root Hann, w(n) = sin(pi*n/N), used for both
  analysis and synthesis. At 50% overlap the pair satisfies the
  constant-overlap-add identity sum_k w^2(n - k*hop) = 1, giving perfect
  reconstruction.
* FFT: forward unnormalized, inverse scaled by 1/fft_len (numpy rfft/irfft).
* Streaming: the analysis ring is primed with zeros, so the first frame
  covers [-hop, hop) of the input. One frame in, hop samples out; the bare
  analysis->synthesis chain delays the signal by window_len - hop_len
  samples.
* Spectral arithmetic runs in float64/complex128 (the frame-level
  invariants are tighter than float32 allows); time-domain buffers are
  float32.
"""

from dataclasses import dataclass

import numpy as np

from .config import StftConfig

SUPPORTED_WINDOW_MS = (5, 10, 20, 40)


@dataclass
class SpectralFrame:
    """One STFT frame: F = fft_len/2 + 1 complex bins."""

    bins: np.ndarray
    frame_index: int = 0

    @property
    def n_bins(self) -> int:
        return self.bins.shape[0]


def make_window(cfg: StftConfig) -> np.ndarray:
    """Periodic sqrt-Hann window of length cfg.window_len."""
    n = cfg.window_len
    if n < 2 or n % 2 != 0:
        raise ValueError(f"window_len must be even and >= 2, got {n}")
    return np.sin(np.pi * np.arange(n) / n)


class AnalysisState:
    """Input ring of window_len samples plus a frame counter."""

    def __init__(self, cfg: StftConfig):
        self.cfg = cfg
        self.window = make_window(cfg)
        self.buffer = np.zeros(cfg.window_len, dtype=np.float32)
        self.frame_index = -1

    def reset(self):
        self.buffer[:] = 0.0
        self.frame_index = -1


class SynthesisState:
    """Overlap-add accumulator of window_len samples."""

    def __init__(self, cfg: StftConfig):
        self.cfg = cfg
        self.window = make_window(cfg)
        self.acc = np.zeros(cfg.window_len, dtype=np.float32)
        self.frame_count = 0

    def reset(self):
        self.acc[:] = 0.0
        self.frame_count = 0


def analysis_step(state: AnalysisState, samples: np.ndarray) -> SpectralFrame:
    """Push hop_len new samples and return the windowed FFT of the ring."""
    hop = state.cfg.hop_len
    samples = np.asarray(samples)
    if samples.shape != (hop,):
        raise ValueError(f"expected {hop} samples, got shape {samples.shape}")
    state.buffer[:-hop] = state.buffer[hop:]
    state.buffer[-hop:] = samples.astype(np.float32)
    state.frame_index += 1
    spec = np.fft.rfft(state.buffer.astype(np.float64) * state.window)
    return SpectralFrame(bins=spec, frame_index=state.frame_index)


def synthesis_step(state: SynthesisState, frame: SpectralFrame) -> np.ndarray:
    """Inverse FFT, synthesis window, overlap-add; emits hop_len samples."""
    cfg = state.cfg
    if frame.n_bins != cfg.fft_len // 2 + 1:
        raise ValueError(
            f"expected {cfg.fft_len // 2 + 1} bins, got {frame.n_bins}")
    hop = cfg.hop_len
    chunk = np.fft.irfft(frame.bins, n=cfg.fft_len) * state.window
    state.acc += chunk.astype(np.float32)
    out = state.acc[:hop].copy()
    state.acc[:-hop] = state.acc[hop:]
    state.acc[-hop:] = 0.0
    state.frame_count += 1
    return out


def stft_offline(signal: np.ndarray, window_ms: float,
                 sample_rate: int = 48000) -> list[SpectralFrame]:
    """Batch STFT at 50% overlap, matching the streaming analysis frames.

    The signal is padded with window_len - hop_len leading zeros (the
    streaming warm-up) and a zero tail so every sample is covered by a
    whole number of hops; frame k covers input span [(k-1)*hop, (k+1)*hop).
    """
    if window_ms not in SUPPORTED_WINDOW_MS:
        raise ValueError(
            f"window_ms must be one of {SUPPORTED_WINDOW_MS}, got {window_ms}")
    signal = np.asarray(signal, dtype=np.float64).ravel()
    if signal.size == 0:
        raise ValueError("signal must be non-empty")
    cfg = StftConfig.from_window_ms(window_ms, sample_rate=sample_rate)
    win = make_window(cfg)
    hop, wlen = cfg.hop_len, cfg.window_len
    n_frames = -(-signal.size // hop) + (wlen // hop - 1)
    padded = np.zeros((n_frames - 1) * hop + wlen)
    padded[wlen - hop:wlen - hop + signal.size] = signal
    frames = np.lib.stride_tricks.sliding_window_view(padded, wlen)[::hop]
    spec = np.fft.rfft(frames * win, axis=-1)
    return [SpectralFrame(bins=spec[k], frame_index=k) for k in range(n_frames)]


def istft_offline(frames: list[SpectralFrame], cfg: StftConfig) -> np.ndarray:
    """Overlap-add resynthesis of a frame sequence; hop_len samples per frame."""
    state = SynthesisState(cfg)
    out = np.empty(len(frames) * cfg.hop_len, dtype=np.float32)
    for k, frame in enumerate(frames):
        out[k * cfg.hop_len:(k + 1) * cfg.hop_len] = synthesis_step(state, frame)
    return out


def frames_to_matrix(frames: list[SpectralFrame]) -> np.ndarray:
    """Stack a frame sequence into a [n_frames, n_bins] complex array."""
    return np.stack([f.bins for f in frames], axis=0)

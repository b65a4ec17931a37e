"""The full enhancement pipeline: features -> encoder -> two stages -> taps.

Stream delay accounting (default profile, 48 kHz):

* analysis/synthesis overlap-add     window_len - hop_len =  480 samples
* deep-filter look-ahead             l * hop_len          =  960 samples
* one-chunk output hold              hop_len              =  480 samples

The output hold aligns the file-domain shift with the wall-clock
algorithmic latency (a frame is only complete once its full window has
been buffered), so the end-to-end delay is exactly
window_len + l * hop_len = 1920 samples (40 ms).
"""

import numpy as np

from .config import EngineConfig
from .deepfilter import DfCoefSet, DfState, apply_df, post_filter
from .dsp import (
    AnalysisState,
    SpectralFrame,
    SynthesisState,
    analysis_step,
    synthesis_step,
)
from .erb import apply_gains, build_filterbank, compress, interpolate_gains
from .model import Model, ModelState


class FeatureState:
    """Running normalizers: per-band mean of the log powers and a scalar
    RMS tracker for the complex low-band features (time constant ~1 s)."""

    def __init__(self, cfg: EngineConfig):
        self.alpha = float(np.exp(-cfg.stft.hop_len /
                                  (cfg.stft.sample_rate * cfg.model.norm_tau_s)))
        self.erb_mean = np.full(cfg.model.n_bands, -100.0)
        self.df_power = 1.0

    def reset(self):
        self.erb_mean[:] = -100.0
        self.df_power = 1.0


class Enhancer:
    """Streaming enhancer; one hop-sized chunk in, one chunk out."""

    def __init__(self, weights, use_post_filter: bool = False,
                 beta: float = 0.02):
        self.cfg: EngineConfig = weights.config
        self.model = Model(weights)
        self.fb = build_filterbank(self.cfg.stft, self.cfg.model.n_bands,
                                   shape=self.cfg.model.erb_shape)
        self.use_post_filter = use_post_filter
        self.beta = beta
        self.n_df_bins = self.cfg.df.n_df_bins(self.cfg.stft)
        self.analysis = AnalysisState(self.cfg.stft)
        self.synthesis = SynthesisState(self.cfg.stft)
        self.model_state = ModelState(self.cfg)
        self.df_state = DfState(self.cfg.stft, self.cfg.df)
        self.features = FeatureState(self.cfg)
        self._held_chunk = np.zeros(self.cfg.stft.hop_len, dtype=np.float32)
        self.frames_processed = 0

    def reset(self):
        self.analysis.reset()
        self.synthesis.reset()
        self.model_state.reset()
        self.df_state = DfState(self.cfg.stft, self.cfg.df)
        self.features.reset()
        self._held_chunk[:] = 0.0
        self.frames_processed = 0

    @property
    def delay_samples(self) -> int:
        return self.cfg.stft.delay_samples

    def _extract_features(self, frame: SpectralFrame):
        fs = self.features
        erb_raw = compress(frame.bins, self.fb)
        fs.erb_mean = fs.alpha * fs.erb_mean + (1 - fs.alpha) * erb_raw
        erb_feat = erb_raw - fs.erb_mean

        x_df = frame.bins[:self.n_df_bins]
        power = float(np.mean(x_df.real ** 2 + x_df.imag ** 2))
        fs.df_power = fs.alpha * fs.df_power + (1 - fs.alpha) * power
        scale = 1.0 / np.sqrt(fs.df_power + 1e-10)
        df_feat = np.stack([x_df.real, x_df.imag]) * scale
        return erb_feat, df_feat

    def process_frame(self, frame: SpectralFrame) -> SpectralFrame:
        """Enhance one spectral frame; returns the frame for stamp k - l."""
        erb_feat, df_feat = self._extract_features(frame)
        emb = self.model.encode(self.model_state, erb_feat, df_feat)
        gains = self.model.decode_erb(emb)
        if self.use_post_filter:
            gains = post_filter(gains, self.beta)
        bin_gains = interpolate_gains(gains, self.fb)
        y_g = apply_gains(frame.bins, bin_gains)
        coefs = DfCoefSet(self.model.decode_df(emb))
        self.df_state.push_input(frame)
        out = apply_df(self.df_state,
                       SpectralFrame(y_g, frame.frame_index),
                       coefs, self.cfg.df)
        self.frames_processed += 1
        return out

    def process_chunk(self, samples: np.ndarray) -> np.ndarray:
        """Feed hop_len samples, get the hop_len samples due at this step."""
        frame = analysis_step(self.analysis, samples)
        enhanced = self.process_frame(frame)
        fresh = synthesis_step(self.synthesis, enhanced)
        out, self._held_chunk = self._held_chunk, fresh
        return out

    def enhance(self, signal: np.ndarray,
                delay_compensate: bool = True) -> np.ndarray:
        """Enhance a whole signal, streaming internally.

        With delay compensation the output is time-aligned with the input
        and zero-padded at the tail; without it the raw delayed stream of
        the same length is returned.
        """
        signal = np.asarray(signal, dtype=np.float32).ravel()
        hop = self.cfg.stft.hop_len
        n_chunks = -(-signal.size // hop)
        flush = self.delay_samples // hop
        padded = np.zeros((n_chunks + flush) * hop, dtype=np.float32)
        padded[:signal.size] = signal
        out = np.empty_like(padded)
        for m in range(n_chunks + flush):
            out[m * hop:(m + 1) * hop] = \
                self.process_chunk(padded[m * hop:(m + 1) * hop])
        if delay_compensate:
            return out[self.delay_samples:self.delay_samples + signal.size]
        return out[:signal.size]

"""32-band ERB-scale compression of the spectrum and gain interpolation.

Band edges are spaced uniformly on the Glasberg-Moore ERB-rate scale
erb(f) = 9.265 * ln(1 + f / 226.25), then widened so every band spans at
least one bin. Bands are disjoint; within a band the bin weights follow a
triangular profile (or a flat one for the rectangular variant) and each
row is normalized to unit sum, so a flat unit-power spectrum compresses
to 0 dB in every band and unity band gains interpolate to unity bin
gains exactly.
"""

from dataclasses import dataclass

import numpy as np

from .config import StftConfig

ERB_SCALE = 9.265
ERB_KNEE_HZ = 24.7 * 9.16
LOG_POWER_FLOOR = 1e-10


def hz_to_erb_rate(freq_hz):
    return ERB_SCALE * np.log(1.0 + np.asarray(freq_hz) / ERB_KNEE_HZ)


def erb_rate_to_hz(rate):
    return ERB_KNEE_HZ * (np.exp(np.asarray(rate) / ERB_SCALE) - 1.0)


@dataclass(frozen=True)
class ErbFilterbank:
    """Fixed band-aggregation matrix mapping bins to bands and back.

    weights: [n_bands, n_bins], disjoint rows with unit row sums.
    band_edges: bin indices, length n_bands + 1, edges[0]=0, edges[-1]=n_bins.
    """

    weights: np.ndarray
    band_edges: np.ndarray

    @property
    def n_bands(self) -> int:
        return self.weights.shape[0]

    @property
    def n_bins(self) -> int:
        return self.weights.shape[1]

    def band_of_bin(self) -> np.ndarray:
        """Band index for every bin."""
        return np.searchsorted(self.band_edges, np.arange(self.n_bins),
                               side="right") - 1


def build_filterbank(cfg: StftConfig, n_bands: int = 32,
                     shape: str = "triangular") -> ErbFilterbank:
    """Construct the band matrix for the given STFT geometry."""
    n_bins = cfg.n_bins
    if not 2 <= n_bands <= n_bins:
        raise ValueError(f"n_bands must be in [2, {n_bins}], got {n_bands}")
    if shape not in ("triangular", "rectangular"):
        raise ValueError(f"unknown band shape {shape!r}")

    nyquist = cfg.sample_rate / 2.0
    rates = hz_to_erb_rate(nyquist) * np.arange(n_bands + 1) / n_bands
    edges_hz = erb_rate_to_hz(rates)
    edges = np.rint(edges_hz / cfg.bin_width_hz).astype(int)
    edges[0], edges[-1] = 0, n_bins

    # Widen collapsed bands: walk forward enforcing >= 1 bin each, then pull
    # back any edge the right boundary no longer allows.
    for b in range(1, n_bands + 1):
        edges[b] = max(edges[b], edges[b - 1] + 1)
    for b in range(n_bands, 0, -1):
        edges[b] = min(edges[b], n_bins - (n_bands - b))
    edges[-1] = n_bins

    weights = np.zeros((n_bands, n_bins))
    for b in range(n_bands):
        lo, hi = edges[b], edges[b + 1]
        width = hi - lo
        if shape == "triangular":
            j = np.arange(width)
            profile = np.minimum(j + 1, width - j).astype(float)
        else:
            profile = np.ones(width)
        weights[b, lo:hi] = profile / profile.sum()
    return ErbFilterbank(weights=weights, band_edges=edges)


def compress(frame_bins: np.ndarray, fb: ErbFilterbank) -> np.ndarray:
    """Log band powers: 10*log10(sum_f w(b,f) |X(f)|^2 + eps)."""
    bins = np.asarray(frame_bins)
    if bins.shape[-1] != fb.n_bins:
        raise ValueError(
            f"frame has {bins.shape[-1]} bins, filterbank expects {fb.n_bins}")
    power = (bins.real ** 2 + bins.imag ** 2) @ fb.weights.T
    return 10.0 * np.log10(power + LOG_POWER_FLOOR)


def interpolate_gains(gains: np.ndarray, fb: ErbFilterbank) -> np.ndarray:
    """Spread band gains back to bins via the weight-normalized transpose."""
    gains = np.asarray(gains)
    if gains.shape[-1] != fb.n_bands:
        raise ValueError(
            f"expected {fb.n_bands} band gains, got {gains.shape[-1]}")
    col_sum = fb.weights.sum(axis=0)
    return (gains @ fb.weights) / col_sum


def apply_gains(frame_bins: np.ndarray, bin_gains: np.ndarray) -> np.ndarray:
    """Scale complex bins by real gains; phase is untouched."""
    bins = np.asarray(frame_bins)
    gains = np.asarray(bin_gains)
    if bins.shape != gains.shape:
        raise ValueError(
            f"gain shape {gains.shape} does not match bins {bins.shape}")
    if not np.all(np.isfinite(gains)) or np.any(gains < 0):
        raise ValueError("gains must be finite and non-negative")
    return bins * gains

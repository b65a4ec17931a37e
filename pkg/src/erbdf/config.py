"""Configuration objects shared across the engine."""

from dataclasses import dataclass, field
import math


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class StftConfig:
    """Short-time Fourier analysis geometry.

    The default profile is 20 ms windows at 48 kHz with 50% overlap and a
    2-frame look-ahead, i.e. an overall algorithmic latency of
    window + lookahead * hop = 40 ms.
    """

    sample_rate: int = 48000
    window_len: int = 960
    hop_len: int = 480
    fft_len: int = 960
    lookahead_frames: int = 2

    def __post_init__(self):
        if self.window_len < 2 or self.window_len % 2 != 0:
            raise ConfigError(f"window_len must be even and >= 2, got {self.window_len}")
        if self.hop_len * 2 != self.window_len:
            raise ConfigError("hop_len must be window_len / 2 (50% overlap)")
        if self.fft_len != self.window_len:
            raise ConfigError("fft_len must equal window_len")
        if self.sample_rate <= 0:
            raise ConfigError("sample_rate must be positive")
        if self.lookahead_frames < 0:
            raise ConfigError("lookahead_frames must be >= 0")

    @property
    def n_bins(self) -> int:
        """Number of one-sided spectrum bins F = fft_len/2 + 1."""
        return self.fft_len // 2 + 1

    @property
    def bin_width_hz(self) -> float:
        return self.sample_rate / self.fft_len

    @property
    def frames_per_second(self) -> float:
        return self.sample_rate / self.hop_len

    @property
    def delay_samples(self) -> int:
        """End-to-end stream delay of the enhancement pipeline in samples."""
        return self.window_len + self.lookahead_frames * self.hop_len

    @classmethod
    def from_window_ms(cls, window_ms: float, sample_rate: int = 48000,
                       lookahead_frames: int = 0) -> "StftConfig":
        window = int(round(sample_rate * window_ms / 1000.0))
        return cls(sample_rate=sample_rate, window_len=window, hop_len=window // 2,
                   fft_len=window, lookahead_frames=lookahead_frames)


@dataclass(frozen=True)
class DfConfig:
    """Deep-filtering stage: N complex taps per bin up to f_df."""

    order: int = 5
    lookahead: int = 2
    f_df_hz: float = 5000.0

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")
        if not 0 <= self.lookahead < self.order:
            raise ConfigError("lookahead must satisfy 0 <= lookahead < order")
        if self.f_df_hz <= 0:
            raise ConfigError("f_df_hz must be positive")

    def n_df_bins(self, stft: StftConfig) -> int:
        n = math.ceil(self.f_df_hz / stft.bin_width_hz)
        if n > stft.n_bins:
            raise ConfigError("f_df_hz exceeds the Nyquist band")
        return n


@dataclass(frozen=True)
class ModelConfig:
    """Network hyper-parameters.

    Channel counts and layer depths are engine defaults; the published
    reference point of 2.306 M parameters is informational only.
    """

    n_bands: int = 32
    conv_channels: int = 64
    emb_dim: int = 256
    gru_hidden: int = 256
    n_groups: int = 8
    # The DF output grouping must divide both the embedding dim and the
    # flattened coefficient vector; 8 does not split 100 DF bins evenly.
    df_out_groups: int = 4
    norm_tau_s: float = 1.0
    erb_shape: str = "triangular"

    def __post_init__(self):
        if self.n_bands < 2:
            raise ConfigError("n_bands must be >= 2")
        if self.erb_shape not in ("triangular", "rectangular"):
            raise ConfigError(f"unknown erb_shape {self.erb_shape!r}")
        if self.emb_dim % self.n_groups != 0:
            raise ConfigError("emb_dim must be divisible by n_groups")


@dataclass(frozen=True)
class EngineConfig:
    """Bundle of everything a running enhancer needs."""

    stft: StftConfig = field(default_factory=StftConfig)
    df: DfConfig = field(default_factory=DfConfig)
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.df.lookahead != self.stft.lookahead_frames:
            raise ConfigError("DF lookahead must match StftConfig.lookahead_frames")
        self.df.n_df_bins(self.stft)  # raises if out of range


# Flat key=value names accepted by config files and the weight container
# metadata block.
_CONFIG_KEYS = {
    "sample_rate": ("stft", "sample_rate", int),
    "window_len": ("stft", "window_len", int),
    "hop_len": ("stft", "hop_len", int),
    "fft_len": ("stft", "fft_len", int),
    "lookahead_frames": ("stft", "lookahead_frames", int),
    "order": ("df", "order", int),
    "lookahead": ("df", "lookahead", int),
    "f_df_hz": ("df", "f_df_hz", float),
    "n_bands": ("model", "n_bands", int),
    "conv_channels": ("model", "conv_channels", int),
    "emb_dim": ("model", "emb_dim", int),
    "gru_hidden": ("model", "gru_hidden", int),
    "n_groups": ("model", "n_groups", int),
    "df_out_groups": ("model", "df_out_groups", int),
    "norm_tau_s": ("model", "norm_tau_s", float),
    "erb_shape": ("model", "erb_shape", str),
}


def engine_config_to_dict(cfg: EngineConfig) -> dict:
    """Flatten an EngineConfig into string-keyed values."""
    out = {}
    for key, (section, attr, _) in _CONFIG_KEYS.items():
        out[key] = getattr(getattr(cfg, section), attr)
    return out


def engine_config_from_dict(values: dict) -> EngineConfig:
    """Build an EngineConfig from flat key=value pairs (missing keys default)."""
    sections = {"stft": {}, "df": {}, "model": {}}
    for key, raw in values.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        section, attr, conv = _CONFIG_KEYS[key]
        try:
            sections[section][attr] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return EngineConfig(stft=StftConfig(**sections["stft"]),
                        df=DfConfig(**sections["df"]),
                        model=ModelConfig(**sections["model"]))


def parse_config_text(text: str) -> dict:
    """Parse key=value lines; '#' starts a comment, blank lines ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return values

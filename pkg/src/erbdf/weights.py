"""Weight container: named float32 tensors plus the engine config.

Wire format (little-endian, no alignment padding):

    magic "DFW2" | format version u32 | metadata length u32 |
    metadata UTF-8 "key=value" lines | tensor count u32 |
    per tensor: name length u16, name UTF-8, rank u8, dims u32 x rank,
    raw float32 data row-major
"""

import struct

import numpy as np

from .config import (
    EngineConfig,
    engine_config_from_dict,
    engine_config_to_dict,
)
from .layers import ShapeError
from .model import architecture, tensor_shapes

MAGIC = b"DFW2"
FORMAT_VERSION = 1


class FormatError(Exception):
    """Malformed weight container."""


class ModelWeights:
    """Immutable name -> tensor map with the config it was built for."""

    def __init__(self, tensors: dict, config: EngineConfig):
        validate_tensors(tensors, config)
        for t in tensors.values():
            t.flags.writeable = False
        self.tensors = dict(tensors)
        self.config = config

    def param_count(self) -> int:
        return sum(t.size for t in self.tensors.values())


def validate_tensors(tensors: dict, config: EngineConfig):
    """Check the tensor set exactly matches the architecture."""
    expected = tensor_shapes(config)
    for name, shape in expected.items():
        if name not in tensors:
            raise ShapeError(f"missing tensor {name!r}")
        got = tensors[name].shape
        if tuple(got) != tuple(shape):
            raise ShapeError(
                f"tensor {name!r}: expected shape {shape}, got {got}")
    for name in tensors:
        if name not in expected:
            raise ShapeError(f"unexpected tensor {name!r}")


def save_weights(weights: ModelWeights) -> bytes:
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    meta = "".join(f"{k}={v}\n"
                   for k, v in engine_config_to_dict(weights.config).items())
    meta_bytes = meta.encode("utf-8")
    parts.append(struct.pack("<I", len(meta_bytes)))
    parts.append(meta_bytes)
    parts.append(struct.pack("<I", len(weights.tensors)))
    for name, tensor in weights.tensors.items():
        name_bytes = name.encode("utf-8")
        parts.append(struct.pack("<H", len(name_bytes)))
        parts.append(name_bytes)
        parts.append(struct.pack("<B", tensor.ndim))
        parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise FormatError(
                f"truncated payload: wanted {count} bytes at offset "
                f"{self.pos}, have {len(self.data) - self.pos}")
        out = self.data[self.pos:self.pos + count]
        self.pos += count
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(data: bytes) -> ModelWeights:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise FormatError("bad magic: not a DFW2 weight container")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    (meta_len,) = r.unpack("<I")
    meta_text = r.take(meta_len).decode("utf-8")
    values = {}
    for line in meta_text.splitlines():
        if line.strip():
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
    config = engine_config_from_dict(values)

    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (rank,) = r.unpack("<B")
        dims = r.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(dims)) if dims else 1
        raw = r.take(4 * size)
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    if r.pos != len(data):
        raise FormatError(f"{len(data) - r.pos} trailing bytes after payload")
    return ModelWeights(tensors, config)


def random_weights(config: EngineConfig | None = None,
                   seed: int = 0) -> ModelWeights:
    """Xavier-uniform weights, small uniform biases; deterministic per seed."""
    config = config or EngineConfig()
    rng = np.random.default_rng(seed)
    tensors = {}
    for spec in architecture(config):
        for suffix, shape in spec.weight_shapes().items():
            name = f"{spec.name}.{suffix}"
            if len(shape) == 1:
                tensors[name] = rng.uniform(-0.1, 0.1, shape).astype(np.float32)
                continue
            if spec.kind == "gru":
                limit = 1.0 / np.sqrt(spec.out_dim)
            elif spec.kind == "grouped_linear":
                limit = np.sqrt(6.0 / (shape[1] + shape[2]))
            else:  # conv-style [out, in, kt, kf]
                rfield = int(np.prod(shape[2:]))
                limit = np.sqrt(6.0 / (shape[1] * rfield + shape[0] * rfield))
            tensors[name] = rng.uniform(-limit, limit, shape).astype(np.float32)
    return ModelWeights(tensors, config)


def identity_weights(config: EngineConfig | None = None) -> ModelWeights:
    """Weights that pin band gains to exactly 1 and filter taps to the
    passthrough tap, turning the enhancer into a pure delay."""
    config = config or EngineConfig()
    tensors = {name: np.zeros(shape, dtype=np.float32)
               for name, shape in tensor_shapes(config).items()}
    # sigmoid(40) rounds to 1.0 even in float64
    tensors["dec_erb.out.bias"][:] = 40.0
    n_df = config.df.n_df_bins(config.stft)
    order = config.df.order
    flat = tensors["dec_df.out.bias"].reshape(n_df, order, 2)
    flat[:, config.df.lookahead, 0] = 1.0
    return ModelWeights(tensors, config)

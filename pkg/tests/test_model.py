"""Encoder/decoder behavior and streaming-state guarantees."""

import numpy as np
import pytest

from erbdf.config import DfConfig, EngineConfig, ModelConfig, StftConfig
from erbdf.model import Model, ModelState, architecture
from erbdf.weights import random_weights

CFG = EngineConfig()


@pytest.fixture(scope="module")
def model():
    return Model(random_weights(CFG, seed=42))


def rand_features(rng):
    return rng.standard_normal(32), rng.standard_normal((2, 100))


class TestEncode:
    def test_zero_features_deterministic(self, model):
        outs = []
        for _ in range(2):
            state = ModelState(CFG)
            emb = model.encode(state, np.zeros(32), np.zeros((2, 100)))
            outs.append(emb.vec.copy())
        assert np.array_equal(outs[0], outs[1])

    def test_recurrence_is_live(self, model):
        rng = np.random.default_rng(0)
        erb, df = rand_features(rng)
        state = ModelState(CFG)
        first = model.encode(state, erb, df).vec.copy()
        second = model.encode(state, erb, df).vec.copy()
        assert not np.array_equal(first, second)

    def test_embedding_finite_fuzz(self, model):
        rng = np.random.default_rng(1)
        state = ModelState(CFG)
        for _ in range(1000):
            erb, df = rand_features(rng)
            emb = model.encode(state, 10.0 * erb, 10.0 * df)
            assert np.all(np.isfinite(emb.vec))


class TestDecode:
    def test_gains_bounded_fuzz(self, model):
        rng = np.random.default_rng(2)
        state = ModelState(CFG)
        for _ in range(1000):
            erb, df = rand_features(rng)
            gains = model.decode_erb(model.encode(state, erb, df))
            assert np.all((gains >= 0.0) & (gains <= 1.0))

    def test_coef_shape_default_config(self, model):
        state = ModelState(CFG)
        emb = model.encode(state, np.zeros(32), np.zeros((2, 100)))
        coefs = model.decode_df(emb)
        assert coefs.shape == (5, 100)
        assert coefs.dtype.kind == "c"

    def test_zero_embedding_reproducible(self, model):
        from erbdf.model import Embedding

        zero_skips = [np.zeros((64, 32), np.float32),
                      np.zeros((64, 16), np.float32),
                      np.zeros((64, 8), np.float32),
                      np.zeros((64, 4), np.float32)]
        emb = Embedding(vec=np.zeros(256, np.float32), erb_skips=zero_skips)
        a = model.decode_erb(emb)
        b = model.decode_erb(emb)
        assert np.array_equal(a, b)
        assert np.all((a > 0) & (a < 1))  # sigmoid of the bias path


class TestStreamingInvariants:
    def test_streaming_equals_buffered_clip(self, model):
        rng = np.random.default_rng(3)
        frames = 100
        erb_seq = rng.standard_normal((frames, 32))
        df_seq = rng.standard_normal((frames, 2, 100))
        clip_gains, clip_coefs = model.run_clip(erb_seq, df_seq)

        state = ModelState(CFG)
        for t in range(frames):
            emb = model.encode(state, erb_seq[t], df_seq[t])
            gains = model.decode_erb(emb)
            coefs = model.decode_df(emb)
            assert np.allclose(gains, clip_gains[t], atol=1e-5)
            assert np.allclose(coefs, clip_coefs[t], atol=1e-5)

    def test_determinism_across_runs(self, model):
        rng = np.random.default_rng(4)
        erb_seq = rng.standard_normal((20, 32))
        df_seq = rng.standard_normal((20, 2, 100))
        a = model.run_clip(erb_seq, df_seq)
        b = model.run_clip(erb_seq, df_seq)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])

    def test_state_audit_no_extra_temporal_buffers(self):
        state = ModelState(CFG)
        sizes = state.state_sizes()
        # exactly: two causal input-conv histories plus the GRU hidden
        assert set(sizes) == {"erb_conv0.history", "df_conv0.history",
                              "gru.hidden"}
        assert sizes["erb_conv0.history"] == 2 * 1 * 32
        assert sizes["df_conv0.history"] == 2 * 2 * 100
        assert sizes["gru.hidden"] == 256
        budget = 2 * (32 + 2 * 100) + 256  # 2 input frames + hidden
        assert sum(sizes.values()) <= budget


class TestArchitecture:
    def test_kernel_discipline(self):
        for spec in architecture(CFG):
            if spec.kind in ("conv", "tconv", "pathway_conv"):
                if spec.name.endswith("conv0") and spec.kind == "conv" \
                        and spec.causal_context:
                    assert spec.kernel == (3, 3)
                else:
                    assert spec.kernel[0] == 1

    def test_only_input_layers_causal(self):
        causal = [s.name for s in architecture(CFG) if s.causal_context > 0]
        assert causal == ["enc.erb_conv0", "enc.df_conv0"]

    def test_custom_config_resolves(self):
        cfg = EngineConfig(
            stft=StftConfig(), df=DfConfig(),
            model=ModelConfig(conv_channels=32, emb_dim=128, gru_hidden=128,
                              n_groups=4, df_out_groups=4))
        model = Model(random_weights(cfg, seed=0))
        state = ModelState(cfg)
        emb = model.encode(state, np.zeros(32), np.zeros((2, 100)))
        assert model.decode_erb(emb).shape == (32,)
        assert model.decode_df(emb).shape == (5, 100)

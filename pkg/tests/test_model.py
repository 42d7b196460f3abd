"""Generator-level contracts: stage semantics, causality, offline reference."""

import numpy as np
import pytest

from llvc import Generator, ModelConfig, random_init, weight_spec, parameter_count
from llvc.errors import ShapeError, InconsistentModelError

F32 = np.float32


def noise(rng, n):
    return (rng.random(n, dtype=np.float64) * 2 - 1).astype(F32)


def zeroed(store, predicate):
    out = {}
    for name, w in store.items():
        out[name] = np.zeros_like(w) if predicate(name) else w
    return out


# ---------------------------------------------------------------------------
# weight table
# ---------------------------------------------------------------------------

class TestWeightSpec:
    def test_default_counts_are_stable(self, default_config):
        spec = weight_spec(default_config)
        assert len(spec) == 59
        assert parameter_count(default_config) == 7388163

    def test_shapes_match_init(self, small_config):
        store = random_init(small_config, 0)
        for name, shape in weight_spec(small_config).items():
            assert store[name].shape == shape

    def test_validation_rejects_wrong_shape(self, small_config):
        store = random_init(small_config, 0)
        store["bridge.weight"] = store["bridge.weight"][:, :-1]
        with pytest.raises(InconsistentModelError):
            Generator(store, small_config)

    def test_validation_rejects_missing_tensor(self, small_config):
        store = random_init(small_config, 0)
        del store["mask.bias"]
        with pytest.raises(InconsistentModelError):
            Generator(store, small_config)


# ---------------------------------------------------------------------------
# prenet
# ---------------------------------------------------------------------------

class TestPrenet:
    def test_zero_convs_give_identity(self, small_config, rng):
        store = zeroed(random_init(small_config, 42),
                       lambda n: n.startswith("prenet."))
        gen = Generator(store, small_config)
        wave = noise(rng, 50)
        out, _ = gen.prenet(wave, gen.new_caches().prenet)
        np.testing.assert_array_equal(out, wave)

    def test_output_length_preserved(self, small_gen, rng):
        for t in (1, 14, 240, 4096):
            out, _ = small_gen.prenet(noise(rng, t), small_gen.new_caches().prenet)
            assert out.shape == (t,)

    def test_chunked_equals_offline_bitexact(self, small_gen, rng):
        wave = noise(rng, 300)
        whole, _ = small_gen.prenet(wave, small_gen.new_caches().prenet)
        caches = small_gen.new_caches().prenet
        pieces = []
        pos = 0
        while pos < len(wave):
            step = int(rng.integers(1, 40))
            y, caches = small_gen.prenet(wave[pos:pos + step], caches)
            pieces.append(y)
            pos += step
        np.testing.assert_array_equal(np.concatenate(pieces), whole)


# ---------------------------------------------------------------------------
# encoder
# ---------------------------------------------------------------------------

class TestEncoder:
    def test_zero_input_zero_biases_gives_zero_latent(self, small_config):
        store = zeroed(
            random_init(small_config, 42),
            lambda n: n.endswith(".bias") or n.endswith(".beta"),
        )
        gen = Generator(store, small_config)
        latent, _ = gen.encoder(
            np.zeros(small_config.window_samples, F32), gen.new_caches().encoder
        )
        np.testing.assert_array_equal(
            latent, np.zeros((small_config.encoder_dim, small_config.chunk_frames), F32)
        )

    def test_default_chunk_gives_28_frames(self, default_gen, rng):
        latent, _ = default_gen.encoder(noise(rng, 240), default_gen.new_caches().encoder)
        assert latent.shape == (512, 28)

    def test_chunked_equals_offline_bitexact(self, small_gen, small_config, rng):
        # two chunk windows against one double-length window
        cs, ws = small_config.chunk_samples, small_config.window_samples
        wave = noise(rng, 2 * cs + small_config.lookahead_samples)
        whole, _ = small_gen.encoder(wave, small_gen.new_caches().encoder)
        caches = small_gen.new_caches().encoder
        y1, caches = small_gen.encoder(wave[:ws], caches)
        y2, _ = small_gen.encoder(wave[cs:cs + ws], caches)
        np.testing.assert_array_equal(np.concatenate([y1, y2], axis=1), whole)


# ---------------------------------------------------------------------------
# decoder
# ---------------------------------------------------------------------------

class TestDecoder:
    def test_zero_mask_head_gives_half(self, small_config, rng):
        store = zeroed(random_init(small_config, 42),
                       lambda n: n.startswith("mask."))
        gen = Generator(store, small_config)
        latent = rng.standard_normal(
            (small_config.encoder_dim, small_config.chunk_frames)
        ).astype(F32)
        gate, _ = gen.decoder(latent, gen.new_caches().kv)
        np.testing.assert_array_equal(gate, np.full_like(latent, 0.5))

    def test_gate_strictly_inside_unit_interval(self, small_gen, small_config, rng):
        latent = rng.standard_normal(
            (small_config.encoder_dim, small_config.chunk_frames)
        ).astype(F32)
        gate, _ = small_gen.decoder(latent, small_gen.new_caches().kv)
        assert (gate > 0).all() and (gate < 1).all()

    def test_causality_under_future_perturbation(self, small_gen, small_config, rng):
        latent = rng.standard_normal(
            (small_config.encoder_dim, small_config.chunk_frames)
        ).astype(F32)
        t = 2
        other = latent.copy()
        other[:, t + 1:] += 1.0
        g1, _ = small_gen.decoder(latent, small_gen.new_caches().kv)
        g2, _ = small_gen.decoder(other, small_gen.new_caches().kv)
        np.testing.assert_array_equal(g1[:, : t + 1], g2[:, : t + 1])
        assert not np.array_equal(g1[:, t + 1:], g2[:, t + 1:])


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

class TestSynthesize:
    def test_unit_gate_passes_latent_through(self, small_gen, small_config, rng):
        latent = rng.standard_normal(
            (small_config.encoder_dim, small_config.chunk_frames)
        ).astype(F32)
        ones = np.ones_like(latent)
        tail = np.zeros(small_config.lookahead_samples, F32)
        got, _ = small_gen.synthesize(latent, ones, tail)
        from llvc.kernels import synth_transpose_conv
        want, _ = synth_transpose_conv(
            latent, small_gen.weights["synth.weight"], small_config.stride, tail
        )
        np.testing.assert_array_equal(got, want)

    def test_zero_gate_zero_tail_gives_silence(self, small_gen, small_config, rng):
        latent = rng.standard_normal(
            (small_config.encoder_dim, small_config.chunk_frames)
        ).astype(F32)
        tail = np.zeros(small_config.lookahead_samples, F32)
        got, new_tail = small_gen.synthesize(latent, np.zeros_like(latent), tail)
        np.testing.assert_array_equal(got, np.zeros_like(got))
        np.testing.assert_array_equal(new_tail, tail)

    def test_default_sample_count(self, default_gen, rng):
        latent = rng.standard_normal((512, 28)).astype(F32)
        gate = np.full((512, 28), 0.5, F32)
        samples, tail = default_gen.synthesize(latent, gate, np.zeros(16, F32))
        assert samples.shape == (224,)
        assert tail.shape == (16,)

    def test_shape_mismatch(self, small_gen, small_config):
        with pytest.raises(ShapeError):
            small_gen.synthesize(
                np.zeros((small_config.encoder_dim, 3), F32),
                np.zeros((small_config.encoder_dim, 4), F32),
                np.zeros(small_config.lookahead_samples, F32),
            )


# ---------------------------------------------------------------------------
# offline forward
# ---------------------------------------------------------------------------

class TestForwardOffline:
    def test_length_preserved(self, default_gen, small_gen, rng):
        for t in (1, 239, 240):
            out = default_gen.forward_offline(noise(rng, t))
            assert out.shape == (t,)
        for t in (0, 1, 9, 10, 11, 1000):
            out = small_gen.forward_offline(noise(rng, t))
            assert out.shape == (t,)

    def test_deterministic(self, small_gen, rng):
        wave = noise(rng, 500)
        np.testing.assert_array_equal(
            small_gen.forward_offline(wave), small_gen.forward_offline(wave)
        )

    def test_bounded_for_bounded_input(self, small_gen, rng):
        out = small_gen.forward_offline(noise(rng, 1000))
        assert np.isfinite(out).all()

    def test_run_chunk_window_size_checked(self, small_gen, small_config):
        with pytest.raises(ShapeError):
            small_gen.run_chunk(
                np.zeros(small_config.window_samples + 1, F32),
                small_gen.new_caches(),
            )

    def test_caches_have_documented_shapes(self, small_gen, small_config):
        caches = small_gen.new_caches()
        assert [c.shape for c in caches.prenet] == [
            (1, 2), (4, 4), (4, 4)
        ]
        assert [c.shape for c in caches.encoder] == [
            (16, 2), (16, 4), (16, 8)
        ]
        assert caches.tail.shape == (small_config.lookahead_samples,)
        assert len(caches.kv) == small_config.decoder_layers

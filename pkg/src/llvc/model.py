"""Generator assembly: prenet -> framing -> encoder -> decoder -> synthesis.

The generator is a pure function of (weights, config, caches): `run_chunk`
consumes exactly one chunk window (chunk_samples + lookahead raw samples)
and emits chunk_samples output samples plus the advanced caches. Offline
conversion reuses the same per-chunk routine over a zero-padded signal, so
the two paths are arithmetically identical and their outputs match
bit-for-bit.
"""

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import ShapeError, InconsistentModelError
from . import kernels
from .kernels import KVCache

_F32 = np.float32


def weight_spec(config: ModelConfig) -> dict:
    """Required tensor names -> shapes, in canonical (file) order."""
    spec = {}
    ch = config.prenet_channels
    for i in range(config.prenet_layers):
        c_in = 1 if i == 0 else ch
        c_out = 1 if i == config.prenet_layers - 1 else ch
        spec[f"prenet.{i}.weight"] = (c_out, c_in, config.prenet_kernel)
        spec[f"prenet.{i}.bias"] = (c_out,)
        if i < config.prenet_layers - 1:
            spec[f"prenet.{i}.alpha"] = (1,)
    e = config.encoder_dim
    spec["frame.weight"] = (e, 1, config.frame_window)
    spec["frame.bias"] = (e,)
    for i in range(config.encoder_layers):
        spec[f"encoder.{i}.norm.gamma"] = (e,)
        spec[f"encoder.{i}.norm.beta"] = (e,)
        spec[f"encoder.{i}.conv.weight"] = (e, e, config.encoder_kernel)
        spec[f"encoder.{i}.conv.bias"] = (e,)
    d = config.decoder_dim
    spec["bridge.weight"] = (d, e)
    spec["bridge.bias"] = (d,)
    for j in range(config.decoder_layers):
        spec[f"decoder.{j}.attn_norm.gamma"] = (d,)
        spec[f"decoder.{j}.attn_norm.beta"] = (d,)
        spec[f"decoder.{j}.attn.wq"] = (d, d)
        spec[f"decoder.{j}.attn.wk"] = (d, d)
        spec[f"decoder.{j}.attn.wv"] = (d, d)
        spec[f"decoder.{j}.attn.wo"] = (d, d)
        spec[f"decoder.{j}.ffn_norm.gamma"] = (d,)
        spec[f"decoder.{j}.ffn_norm.beta"] = (d,)
        spec[f"decoder.{j}.ffn.w1"] = (config.ffn_dim, d)
        spec[f"decoder.{j}.ffn.b1"] = (config.ffn_dim,)
        spec[f"decoder.{j}.ffn.w2"] = (d, config.ffn_dim)
        spec[f"decoder.{j}.ffn.b2"] = (d,)
    spec["mask.weight"] = (e, d)
    spec["mask.bias"] = (e,)
    spec["synth.weight"] = (e, 1, config.frame_window)
    return spec


def parameter_count(config: ModelConfig) -> int:
    return sum(int(np.prod(s)) for s in weight_spec(config).values())


def validate_weights(weights: dict, config: ModelConfig):
    """Raise InconsistentModelError unless the store matches the config."""
    spec = weight_spec(config)
    missing = sorted(set(spec) - set(weights))
    extra = sorted(set(weights) - set(spec))
    if missing or extra:
        raise InconsistentModelError(
            f"weight store does not match config: missing={missing} extra={extra}"
        )
    for name, shape in spec.items():
        got = tuple(np.asarray(weights[name]).shape)
        if got != shape:
            raise InconsistentModelError(
                f"tensor {name!r} has shape {got}, config requires {shape}"
            )


@dataclass
class Caches:
    """All per-stream state: left contexts, KV windows, synthesis tail."""
    prenet: list       # per prenet layer, (c_in, (k-1)*dilation)
    encoder: list      # per encoder layer, (e, (k-1)*dilation_i)
    kv: list           # per decoder layer, KVCache
    tail: np.ndarray   # (2*stride,) overlap-add carry


class Generator:
    """Immutable weights + config; all mutable state lives in Caches."""

    def __init__(self, weights: dict, config: ModelConfig):
        validate_weights(weights, config)
        self.config = config
        self.weights = {
            name: np.ascontiguousarray(np.asarray(w, dtype=_F32))
            for name, w in weights.items()
        }
        w = self.weights
        self._prenet_packed = [
            kernels.pack_conv_weight(w[f"prenet.{i}.weight"])
            for i in range(config.prenet_layers)
        ]
        self._frame_packed = np.ascontiguousarray(
            w["frame.weight"].reshape(config.encoder_dim, config.frame_window)
        )
        self._encoder_packed = [
            kernels.pack_conv_weight(w[f"encoder.{i}.conv.weight"])
            for i in range(config.encoder_layers)
        ]

    # -- caches ------------------------------------------------------------

    def new_caches(self) -> Caches:
        cfg = self.config
        ch = cfg.prenet_channels
        prenet = []
        for i in range(cfg.prenet_layers):
            c_in = 1 if i == 0 else ch
            prenet.append(
                kernels.zero_conv_cache(c_in, cfg.prenet_kernel, cfg.prenet_dilations[i])
            )
        encoder = [
            kernels.zero_conv_cache(cfg.encoder_dim, cfg.encoder_kernel, cfg.encoder_dilation(i))
            for i in range(cfg.encoder_layers)
        ]
        kv = [KVCache.empty(cfg.decoder_dim) for _ in range(cfg.decoder_layers)]
        tail = np.zeros(cfg.lookahead_samples, dtype=_F32)
        return Caches(prenet, encoder, kv, tail)

    # -- stages ------------------------------------------------------------

    def prenet(self, wave, caches):
        """Stride-1 causal conv stack with a residual add of the input."""
        cfg = self.config
        wave = np.asarray(wave, dtype=_F32)
        if wave.ndim != 1:
            raise ShapeError(f"prenet input must be 1-D, got shape {wave.shape}")
        h = wave[None, :]
        new_caches = []
        for i in range(cfg.prenet_layers):
            h, c = kernels.causal_conv1d(
                h,
                self.weights[f"prenet.{i}.weight"],
                self.weights[f"prenet.{i}.bias"],
                cfg.prenet_dilations[i],
                caches[i],
                packed=self._prenet_packed[i],
            )
            new_caches.append(c)
            if i < cfg.prenet_layers - 1:
                h = kernels.prelu(h, float(self.weights[f"prenet.{i}.alpha"][0]))
        return wave + h[0], new_caches

    def encoder(self, samples, caches):
        """Framing conv then residual dilated-causal-conv blocks (pre-norm)."""
        cfg = self.config
        latent = kernels.framing_conv(
            samples,
            self.weights["frame.weight"],
            self.weights["frame.bias"],
            cfg.stride,
            packed=self._frame_packed,
            time_block=max(2, cfg.chunk_frames),
        )
        new_caches = []
        for i in range(cfg.encoder_layers):
            normed = kernels.layer_norm(
                latent.T,
                self.weights[f"encoder.{i}.norm.gamma"],
                self.weights[f"encoder.{i}.norm.beta"],
            )
            y, c = kernels.causal_conv1d(
                normed.T,
                self.weights[f"encoder.{i}.conv.weight"],
                self.weights[f"encoder.{i}.conv.bias"],
                cfg.encoder_dilation(i),
                caches[i],
                packed=self._encoder_packed[i],
                time_block=max(2, cfg.chunk_frames),
            )
            new_caches.append(c)
            g = kernels.gelu(y)
            g += latent
            latent = g
        return latent, new_caches

    def decoder(self, latent, kv_caches):
        """Project to decoder width, run masked attention blocks, emit a
        sigmoid gate per latent element."""
        cfg = self.config
        w = self.weights
        h = kernels.linear(latent.T, w["bridge.weight"], w["bridge.bias"])
        new_kv = []
        for j in range(cfg.decoder_layers):
            a, kv = kernels.mha_causal(
                kernels.layer_norm(
                    h, w[f"decoder.{j}.attn_norm.gamma"], w[f"decoder.{j}.attn_norm.beta"]
                ),
                w[f"decoder.{j}.attn.wq"],
                w[f"decoder.{j}.attn.wk"],
                w[f"decoder.{j}.attn.wv"],
                w[f"decoder.{j}.attn.wo"],
                cfg.attention_heads,
                kv_caches[j],
                cfg.attention_window,
            )
            new_kv.append(kv)
            h = h + a
            f = kernels.linear(
                kernels.gelu(
                    kernels.linear(
                        kernels.layer_norm(
                            h,
                            w[f"decoder.{j}.ffn_norm.gamma"],
                            w[f"decoder.{j}.ffn_norm.beta"],
                        ),
                        w[f"decoder.{j}.ffn.w1"],
                        w[f"decoder.{j}.ffn.b1"],
                    )
                ),
                w[f"decoder.{j}.ffn.w2"],
                w[f"decoder.{j}.ffn.b2"],
            )
            h = h + f
        gate = kernels.sigmoid(kernels.linear(h, w["mask.weight"], w["mask.bias"]))
        return np.ascontiguousarray(gate.T), new_kv

    def synthesize(self, latent, gate, tail):
        """Gate the latent and overlap-add back to samples."""
        if latent.shape != gate.shape:
            raise ShapeError(f"latent shape {latent.shape} != gate shape {gate.shape}")
        return kernels.synth_transpose_conv(
            latent * gate, self.weights["synth.weight"], self.config.stride, tail
        )

    # -- chunk / offline ---------------------------------------------------

    def run_chunk(self, window, caches: Caches):
        """Process one chunk window (chunk_samples + lookahead samples).

        The prenet advances its cache over the chunk's own samples only; the
        lookahead samples are run through a throwaway continuation of that
        cache, so the next chunk re-processes them identically.
        """
        cfg = self.config
        window = np.asarray(window, dtype=_F32)
        if window.shape != (cfg.window_samples,):
            raise ShapeError(
                f"chunk window must have {cfg.window_samples} samples, "
                f"got {window.shape}"
            )
        cs = cfg.chunk_samples
        p_main, prenet_caches = self.prenet(window[:cs], caches.prenet)
        p_look, _ = self.prenet(window[cs:], prenet_caches)
        latent, enc_caches = self.encoder(
            np.concatenate([p_main, p_look]), caches.encoder
        )
        gate, kv = self.decoder(latent, caches.kv)
        samples, tail = self.synthesize(latent, gate, caches.tail)
        return samples, Caches(prenet_caches, enc_caches, kv, tail)

    def forward_offline(self, wave):
        """Convert a whole signal; output length equals input length.

        Internally right-pads with zeros to whole chunks plus lookahead and
        runs the identical per-chunk routine a fresh stream would run.
        """
        cfg = self.config
        wave = np.asarray(wave, dtype=_F32)
        if wave.ndim != 1:
            raise ShapeError(f"input must be 1-D, got shape {wave.shape}")
        t = wave.shape[0]
        if t == 0:
            return np.zeros(0, dtype=_F32)
        cs = cfg.chunk_samples
        n_chunks = -(-t // cs)
        padded = np.zeros(n_chunks * cs + cfg.lookahead_samples, dtype=_F32)
        padded[:t] = wave
        caches = self.new_caches()
        outs = []
        for c in range(n_chunks):
            y, caches = self.run_chunk(padded[c * cs: c * cs + cfg.window_samples], caches)
            outs.append(y)
        return np.concatenate(outs)[:t]

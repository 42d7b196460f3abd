"""Chunk-based streaming state machine.

A Stream buffers raw input until a full batch of chunks plus lookahead is
available, runs the generator one chunk at a time, and emits exactly
chunk_samples output samples per chunk. Batching (chunks_per_call > 1)
changes only when processing happens — never the arithmetic — so emitted
samples are bit-identical for every batch size and for every way of
slicing the input across push() calls.
"""

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .errors import ParameterError, StateError
from .model import Generator

_F32 = np.float32


def algorithmic_latency_s(config: ModelConfig, chunks_per_call: int = 1) -> float:
    """Buffering delay in seconds before the first sample can be emitted:
    (chunks_per_call * chunk_samples + lookahead) / sample_rate."""
    if chunks_per_call < 1:
        raise ParameterError(f"chunks_per_call must be >= 1, got {chunks_per_call}")
    if config.sample_rate <= 0 or config.stride <= 0 or config.chunk_frames <= 0:
        raise ParameterError("sample_rate, stride and chunk_frames must be positive")
    samples = chunks_per_call * config.chunk_samples + config.lookahead_samples
    return samples / config.sample_rate


@dataclass(frozen=True)
class LatencyModel:
    algorithmic_latency_s: float
    chunk_samples: int
    lookahead_samples: int

    @classmethod
    def from_config(cls, config: ModelConfig, chunks_per_call: int = 1) -> "LatencyModel":
        return cls(
            algorithmic_latency_s=algorithmic_latency_s(config, chunks_per_call),
            chunk_samples=config.chunk_samples,
            lookahead_samples=config.lookahead_samples,
        )


class Stream:
    """Exclusively-owned streaming converter over shared immutable weights.

    push() accepts arbitrary-size sample slices and returns whatever output
    became ready; flush() zero-pads the final chunk so total output length
    equals total input length, then makes the stream terminal until reset().
    """

    def __init__(self, generator: Generator, chunks_per_call: int = 1):
        if chunks_per_call < 1:
            raise ParameterError(
                f"chunks_per_call must be >= 1, got {chunks_per_call}"
            )
        self.generator = generator
        self.chunks_per_call = chunks_per_call
        self.reset()

    def reset(self):
        """Zero all caches and counters; weights are retained."""
        self._caches = self.generator.new_caches()
        self._pending = np.zeros(0, dtype=_F32)
        self.samples_in = 0
        self.samples_out = 0
        self.chunks_processed = 0
        self.clipped_samples = 0
        self._flushed = False

    @property
    def flushed(self) -> bool:
        return self._flushed

    def _sanitize(self, samples):
        x = np.asarray(samples, dtype=_F32).reshape(-1)
        bad = ~np.isfinite(x)
        out_of_range = (x < -1.0) | (x > 1.0)
        n_bad = int(bad.sum()) + int((out_of_range & ~bad).sum())
        if n_bad:
            self.clipped_samples += n_bad
            x = x.copy()
            x[bad] = 0.0
            np.clip(x, -1.0, 1.0, out=x)
        return x

    def _run_chunks(self, count):
        cfg = self.generator.config
        cs, ws = cfg.chunk_samples, cfg.window_samples
        outs = []
        for c in range(count):
            window = self._pending[c * cs: c * cs + ws]
            y, self._caches = self.generator.run_chunk(window, self._caches)
            outs.append(y)
        self._pending = self._pending[count * cs:].copy()
        self.chunks_processed += count
        self.samples_out += count * cs
        return outs

    def push(self, samples) -> np.ndarray:
        """Feed mono samples in [-1, 1]; returns output ready so far.

        Out-of-range values are clamped and non-finite values zeroed, both
        counted in clipped_samples. Processing triggers once
        chunks_per_call * chunk_samples + lookahead samples are buffered.
        """
        if self._flushed:
            raise StateError("push after flush; call reset() to reuse the stream")
        x = self._sanitize(samples)
        self.samples_in += x.shape[0]
        self._pending = np.concatenate([self._pending, x])
        cfg = self.generator.config
        batch = self.chunks_per_call * cfg.chunk_samples
        outs = []
        while self._pending.shape[0] >= batch + cfg.lookahead_samples:
            outs.extend(self._run_chunks(self.chunks_per_call))
        if not outs:
            return np.zeros(0, dtype=_F32)
        return np.concatenate(outs)

    def flush(self) -> np.ndarray:
        """Zero-pad to complete the final chunk; afterwards samples_out ==
        samples_in and the stream is terminal."""
        if self._flushed:
            raise StateError("stream already flushed")
        self._flushed = True
        cfg = self.generator.config
        remaining = self.samples_in - self.samples_out
        if remaining == 0:
            self._pending = np.zeros(0, dtype=_F32)
            return np.zeros(0, dtype=_F32)
        cs = cfg.chunk_samples
        n_chunks = -(-remaining // cs)
        padded_len = n_chunks * cs + cfg.lookahead_samples
        pad = np.zeros(padded_len - self._pending.shape[0], dtype=_F32)
        self._pending = np.concatenate([self._pending, pad])
        outs = self._run_chunks(n_chunks)
        out = np.concatenate(outs)[:remaining]
        # counters track real audio, not the zero padding
        self.samples_out = self.samples_in
        self._pending = np.zeros(0, dtype=_F32)
        return out

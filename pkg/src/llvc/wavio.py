"""Minimal WAV I/O: RIFF little-endian, mono, PCM16 or IEEE-float32.

Reads map PCM16 to floats by x / 32768; writes clamp to [-1, 1], scale by
32767 and round to nearest (ties to even), so a write/read round trip is
within 1/32768 per sample. No resampling: a rate mismatch is an error, so
latency accounting can never be silently wrong. Chunks other than fmt/data
are skipped.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import AudioFormatError

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


@dataclass
class AudioBuffer:
    samples: np.ndarray   # float32 mono
    sample_rate: int

    @property
    def duration_s(self) -> float:
        return self.samples.shape[0] / self.sample_rate


def read_wav(path, expected_rate: int) -> AudioBuffer:
    """Read a mono WAV file, requiring its sample rate to match."""
    try:
        with open(path, "rb") as f:
            buf = f.read()
    except OSError as exc:
        raise AudioFormatError(f"cannot read {path}: {exc}") from exc
    if len(buf) < 12 or buf[:4] != b"RIFF" or buf[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(buf):
        cid, size = struct.unpack_from("<4sI", buf, pos)
        pos += 8
        body = buf[pos:pos + size]
        if len(body) < size:
            raise AudioFormatError(f"{path}: chunk {cid!r} extends past end of file")
        if cid == b"fmt ":
            if size < 16:
                raise AudioFormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            data = body
        pos += size + (size & 1)  # chunks are word-aligned

    if fmt is None or data is None:
        raise AudioFormatError(f"{path}: missing fmt or data chunk")
    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if channels != 1:
        raise AudioFormatError(f"{path}: mono required, file has {channels} channels")
    if rate != expected_rate:
        raise AudioFormatError(
            f"{path}: sample rate is {rate} Hz, expected {expected_rate} Hz"
        )
    if audio_format == _FMT_PCM and bits == 16:
        samples = np.frombuffer(data, dtype="<i2").astype(np.float32) / np.float32(32768.0)
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float32)
        if not np.isfinite(samples).all():
            raise AudioFormatError(f"{path}: non-finite samples in float data")
    else:
        raise AudioFormatError(
            f"{path}: unsupported codec (format {audio_format}, {bits}-bit); "
            f"use PCM16 or IEEE-float32"
        )
    return AudioBuffer(samples=samples, sample_rate=rate)


def write_wav(path, buffer: AudioBuffer):
    """Write mono PCM16; samples are clamped to [-1, 1] before quantizing."""
    if buffer.sample_rate <= 0:
        raise AudioFormatError(f"sample rate must be positive, got {buffer.sample_rate}")
    x = np.asarray(buffer.samples, dtype=np.float32).reshape(-1)
    if not np.isfinite(x).all():
        raise AudioFormatError("cannot write non-finite samples")
    pcm = np.rint(np.clip(x, -1.0, 1.0) * 32767.0).astype("<i2")
    data = pcm.tobytes()
    rate = int(buffer.sample_rate)
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(data), b"WAVE",
        b"fmt ", 16, _FMT_PCM, 1, rate, rate * 2, 2, 16,
        b"data", len(data),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(data)
        if len(data) & 1:
            f.write(b"\x00")

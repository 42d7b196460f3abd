"""Bit-exact weight serialization and deterministic random initialization.

File layout (all integers little-endian, version 1):

    bytes 0-3   magic "LLVC"
    u32         format version (1)
    u32         metadata length M
    M bytes     UTF-8 JSON model config (canonical: sorted keys, no spaces)
    u32         tensor count
    per tensor  u32 name length, UTF-8 name,
                u32 rank, rank * u32 dims,
                u32 dtype tag (0 = float32 little-endian),
                u32 byte offset into the data section
    padding     zeros to the next 64-byte file boundary
    data        tensor payloads; every offset 64-byte aligned, ascending,
                non-overlapping

Random init uses a splitmix-style 64-bit generator in counter form so any
implementation can reproduce it: output j (counting from 0 across all
tensor elements in canonical order) is

    z = seed + (j + 1) * 0x9E3779B97F4A7C15        (mod 2^64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9       (mod 2^64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB       (mod 2^64)
    z =  z ^ (z >> 31)
    u = (z >> 40) / 2^24                           in [0, 1)

and the element value is float32((2u - 1) * sqrt(1 / fan_in)), computed in
float64 and rounded once. fan_in is the product of a tensor's trailing
dimensions (1 for vectors).
"""

import json
import struct

import numpy as np

from .config import ModelConfig
from .errors import (
    FormatError,
    NotAWeightFileError,
    UnsupportedVersionError,
    TruncatedDataError,
    InconsistentModelError,
)
from .model import weight_spec, validate_weights

MAGIC = b"LLVC"
VERSION = 1
DTYPE_F32 = 0
_ALIGN = 64

_PHI = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _align(n: int) -> int:
    return (n + _ALIGN - 1) // _ALIGN * _ALIGN


def save_weights(store: dict, config: ModelConfig, path):
    """Serialize a validated store; identical inputs give identical bytes."""
    validate_weights(store, config)
    meta = config.to_json().encode("utf-8")
    header = bytearray()
    header += MAGIC
    header += struct.pack("<I", VERSION)
    header += struct.pack("<I", len(meta))
    header += meta
    header += struct.pack("<I", len(store))

    offset = 0
    offsets = {}
    for name, tensor in store.items():
        offsets[name] = offset
        offset = _align(offset + np.asarray(tensor).size * 4)

    for name, tensor in store.items():
        tensor = np.asarray(tensor, dtype=np.float32)
        nb = name.encode("utf-8")
        header += struct.pack("<I", len(nb))
        header += nb
        header += struct.pack("<I", tensor.ndim)
        header += struct.pack(f"<{tensor.ndim}I", *tensor.shape)
        header += struct.pack("<I", DTYPE_F32)
        header += struct.pack("<I", offsets[name])

    data_start = _align(len(header))
    blob = bytearray(header)
    blob += b"\x00" * (data_start - len(header))
    for name, tensor in store.items():
        tensor = np.ascontiguousarray(np.asarray(tensor, dtype="<f4"))
        pos = data_start + offsets[name]
        blob += b"\x00" * (pos - len(blob))
        blob += tensor.tobytes()
    with open(path, "wb") as f:
        f.write(bytes(blob))


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.buf):
            raise FormatError(f"truncated header while reading {what}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what):
        return struct.unpack("<I", self.take(4, what))[0]


def load_weights(path):
    """Read and validate a weight file; returns (store, config)."""
    with open(path, "rb") as f:
        buf = f.read()
    r = _Reader(buf)
    if r.take(4, "magic") != MAGIC:
        raise NotAWeightFileError(f"{path}: not a weight file (bad magic)")
    version = r.u32("version")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported version {version}")
    meta_len = r.u32("metadata length")
    meta = r.take(meta_len, "metadata")
    config = ModelConfig.from_json(meta.decode("utf-8"))
    count = r.u32("tensor count")
    records = []
    for _ in range(count):
        name_len = r.u32("name length")
        name = r.take(name_len, "name").decode("utf-8")
        rank = r.u32("rank")
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank, "dims"))
        dtype = r.u32("dtype tag")
        if dtype != DTYPE_F32:
            raise FormatError(f"{path}: tensor {name!r} has unknown dtype tag {dtype}")
        offset = r.u32("offset")
        records.append((name, dims, offset))

    data_start = _align(r.pos)
    data = buf[data_start:]
    store = {}
    spans = []
    for name, dims, offset in records:
        if name in store:
            raise FormatError(f"{path}: duplicate tensor {name!r}")
        size = int(np.prod(dims, dtype=np.int64)) if dims else 1
        end = offset + size * 4
        if offset % _ALIGN != 0:
            raise FormatError(f"{path}: tensor {name!r} offset {offset} not 64-byte aligned")
        if end > len(data):
            raise TruncatedDataError(
                f"{path}: tensor {name!r} needs bytes [{offset}, {end}) "
                f"but the data section has {len(data)}"
            )
        spans.append((offset, end, name))
        arr = np.frombuffer(data, dtype="<f4", count=size, offset=offset)
        store[name] = arr.reshape(dims).copy()
    spans.sort()
    for (_, prev_end, prev_name), (start, _, name) in zip(spans, spans[1:]):
        if start < prev_end:
            raise FormatError(f"{path}: tensors {prev_name!r} and {name!r} overlap")

    try:
        validate_weights(store, config)
    except InconsistentModelError as exc:
        raise InconsistentModelError(f"{path}: inconsistent model: {exc}") from exc
    return store, config


# ---------------------------------------------------------------------------
# deterministic initialization
# ---------------------------------------------------------------------------

def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _uniform_block(seed: int, start: int, count: int) -> np.ndarray:
    """count uniforms in [0, 1) at counter positions start..start+count-1."""
    j = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (j + np.uint64(1)) * _PHI
        z = _mix64(state)
    return (z >> np.uint64(40)).astype(np.float64) * 2.0 ** -24


def fan_in(shape) -> int:
    if len(shape) < 2:
        return 1
    n = 1
    for d in shape[1:]:
        n *= d
    return n


def random_init(config: ModelConfig, seed: int) -> dict:
    """Fill every tensor in canonical order from one splitmix64 stream."""
    store = {}
    counter = 0
    for name, shape in weight_spec(config).items():
        size = int(np.prod(shape))
        u = _uniform_block(seed, counter, size)
        counter += size
        bound = (1.0 / fan_in(shape)) ** 0.5
        store[name] = ((2.0 * u - 1.0) * bound).astype(np.float32).reshape(shape)
    return store

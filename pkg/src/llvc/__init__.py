"""Low-latency streaming voice conversion: engine, weights, audio, metrics."""

from .config import ModelConfig
from .errors import (
    LLVCError,
    ShapeError,
    FramingError,
    ConfigError,
    ParameterError,
    StateError,
    FormatError,
    AudioFormatError,
)
from .kernels import KVCache
from .model import Generator, Caches, weight_spec, parameter_count
from .stream import Stream, LatencyModel, algorithmic_latency_s
from .weights import save_weights, load_weights, random_init
from .wavio import AudioBuffer, read_wav, write_wav
from .metrics import MelConfig, mel_distance, snr_db

__version__ = "0.1.0"

__all__ = [
    "ModelConfig",
    "Generator",
    "Caches",
    "KVCache",
    "Stream",
    "LatencyModel",
    "algorithmic_latency_s",
    "weight_spec",
    "parameter_count",
    "save_weights",
    "load_weights",
    "random_init",
    "AudioBuffer",
    "read_wav",
    "write_wav",
    "MelConfig",
    "mel_distance",
    "snr_db",
    "LLVCError",
    "ShapeError",
    "FramingError",
    "ConfigError",
    "ParameterError",
    "StateError",
    "FormatError",
    "AudioFormatError",
    "__version__",
]

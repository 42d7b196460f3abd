"""Model configuration: architecture hyperparameters and derived sizes.

The defaults describe the shipped architecture: a 3-layer causal prenet at
sample rate, a framing convolution with stride 8 and a 24-sample window
(hence 16 samples of lookahead), an 8-layer dilated-causal-conv encoder at
512 channels, and a single masked-attention decoder layer at 256 channels
emitting a sigmoid gate over the encoder latent.
"""

import json
from dataclasses import dataclass, field, asdict

from .errors import ConfigError


@dataclass(frozen=True)
class ModelConfig:
    sample_rate: int = 16000
    stride: int = 8                  # samples per latent frame
    chunk_frames: int = 28           # latent frames per streaming chunk
    encoder_dim: int = 512
    encoder_layers: int = 8
    encoder_kernel: int = 3
    encoder_dilation_growth: int = 2  # layer i uses dilation growth**i
    decoder_dim: int = 256
    decoder_layers: int = 1
    attention_heads: int = 8
    attention_window: int = 100      # max key/value frames kept across chunks
    ffn_dim: int = 1024
    prenet_layers: int = 3
    prenet_channels: int = 32
    prenet_kernel: int = 7
    prenet_dilations: tuple = (1, 2, 4)

    def __post_init__(self):
        object.__setattr__(self, "prenet_dilations", tuple(self.prenet_dilations))
        self.validate()

    # -- derived sizes ----------------------------------------------------

    @property
    def chunk_samples(self) -> int:
        """New input samples consumed per chunk."""
        return self.chunk_frames * self.stride

    @property
    def lookahead_samples(self) -> int:
        """Future samples the framing conv reads past the chunk boundary."""
        return 2 * self.stride

    @property
    def window_samples(self) -> int:
        """Samples needed to run one chunk: chunk_samples + lookahead."""
        return self.chunk_samples + self.lookahead_samples

    @property
    def frame_window(self) -> int:
        """Width in samples of the framing conv kernel (3 * stride)."""
        return 3 * self.stride

    def encoder_dilation(self, layer: int) -> int:
        return self.encoder_dilation_growth ** layer

    # -- validation / serialization ---------------------------------------

    def validate(self):
        pos = [
            ("sample_rate", self.sample_rate),
            ("stride", self.stride),
            ("chunk_frames", self.chunk_frames),
            ("encoder_dim", self.encoder_dim),
            ("encoder_layers", self.encoder_layers),
            ("encoder_kernel", self.encoder_kernel),
            ("encoder_dilation_growth", self.encoder_dilation_growth),
            ("decoder_dim", self.decoder_dim),
            ("decoder_layers", self.decoder_layers),
            ("attention_heads", self.attention_heads),
            ("attention_window", self.attention_window),
            ("ffn_dim", self.ffn_dim),
            ("prenet_layers", self.prenet_layers),
            ("prenet_channels", self.prenet_channels),
            ("prenet_kernel", self.prenet_kernel),
        ]
        for name, value in pos:
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.decoder_dim % self.attention_heads != 0:
            raise ConfigError(
                f"decoder_dim {self.decoder_dim} not divisible by "
                f"attention_heads {self.attention_heads}"
            )
        if len(self.prenet_dilations) != self.prenet_layers:
            raise ConfigError(
                f"prenet_dilations has {len(self.prenet_dilations)} entries "
                f"for {self.prenet_layers} layers"
            )
        for d in self.prenet_dilations:
            if not isinstance(d, int) or d < 1:
                raise ConfigError(f"prenet dilation must be a positive integer, got {d!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["prenet_dilations"] = list(self.prenet_dilations)
        return d

    def to_json(self) -> str:
        """Canonical JSON form (sorted keys, no whitespace drift)."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ModelConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(d)

    @classmethod
    def from_file(cls, path) -> "ModelConfig":
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)

"""Exception hierarchy shared across the package."""


class LLVCError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(LLVCError):
    """Tensor dimensions are inconsistent with the operation's contract."""


class FramingError(ShapeError):
    """Sample count cannot be framed (must be n*stride + 2*stride)."""


class ConfigError(LLVCError):
    """Model configuration is invalid or inconsistent."""


class ParameterError(LLVCError):
    """A call argument is outside its allowed range."""


class StateError(LLVCError):
    """Stream or cache state was used in a way its lifecycle forbids."""


class FormatError(LLVCError):
    """Weight file cannot be parsed or validated."""


class NotAWeightFileError(FormatError):
    """File does not start with the weight-file magic."""


class UnsupportedVersionError(FormatError):
    """Weight file declares a format version newer than this reader."""


class TruncatedDataError(FormatError):
    """A tensor record points outside the file's data section."""


class InconsistentModelError(FormatError):
    """Stored tensors do not match the shapes required by the config."""


class AudioFormatError(LLVCError):
    """WAV file is missing, malformed, or not in the supported subset."""

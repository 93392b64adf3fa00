"""Exception taxonomy shared across the toolkit."""


class WinvertError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(WinvertError, ValueError):
    """An argument violates a documented precondition or invariant."""


class UsageError(WinvertError):
    """An operation was called on an object in the wrong role (e.g. wrong stage)."""


class ConfigurationError(ValidationError):
    """A configuration is internally inconsistent."""


class LatentFormatError(WinvertError):
    """A latent byte stream does not start with a valid header."""


class CorruptionError(WinvertError):
    """Checksum mismatch while decoding a latent or stego payload."""


class TruncatedStreamError(WinvertError, IOError):
    """A byte stream ended before its declared payload."""


class AssetError(WinvertError):
    """An external asset (weights, manifest, direction file) is missing or incompatible."""


class CapacityError(WinvertError):
    """A carrier image cannot hold the requested payload."""

    def __init__(self, required_bits: int, available_bits: int):
        self.required_bits = required_bits
        self.available_bits = available_bits
        super().__init__(
            f"payload needs {required_bits} bits but carrier offers {available_bits}"
        )


class DataError(WinvertError):
    """A dataset is unusable for the requested task (missing pairs, empty dir)."""


class TrainingDivergedError(WinvertError):
    """Training hit a non-finite loss; carries a diagnostics dump."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)

"""Exception types shared across the package."""


class ForgeError(Exception):
    """Base class for all aimc-forge errors."""


class ConfigError(ForgeError):
    """Invalid or inconsistent generation configuration."""


class SynthesisError(ForgeError):
    """A waveform law could not be evaluated for the given parameters."""


class ContainerError(ForgeError):
    """Base class for pulse-container I/O failures."""


class FormatError(ContainerError):
    """Bad magic or otherwise unparseable container."""


class VersionError(ContainerError):
    """Container was written by a newer format version."""


class TruncationError(ContainerError):
    """Container ends mid-record."""


class IntegrityError(ContainerError):
    """A per-record checksum failed."""

    def __init__(self, message, pulse_index=None):
        super().__init__(message)
        self.pulse_index = pulse_index


class DatasetError(ForgeError):
    """Corpus-level failure (missing files, bad manifest, bad strata)."""

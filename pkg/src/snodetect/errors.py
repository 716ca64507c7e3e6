"""Exception types shared across the package."""


class SnodetectError(Exception):
    """Base class for all package-specific errors."""


class AudioFormatError(SnodetectError):
    """The file is a container or codec we do not decode."""


class CorruptFileError(SnodetectError):
    """The file claims to be something its bytes cannot back up."""


class UnsupportedRateError(SnodetectError):
    """Requested a rate conversion outside the shipped integer ratios."""


class ConfigurationError(SnodetectError):
    """Invalid configuration value or inconsistent setup."""

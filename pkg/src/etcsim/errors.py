"""Exception hierarchy shared across the package."""


class EtcsimError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EtcsimError):
    """Invalid dimensions, unknown presets or malformed config input."""


class CertificateError(EtcsimError):
    """A stability certificate could not be produced or verified."""


class UnsupportedModelError(EtcsimError):
    """The model violates a structural precondition of the requested routine."""


class NumericOverflowError(EtcsimError):
    """A numeric evaluation produced a non-finite value."""


class FitError(EtcsimError):
    """A diagnostic fit was requested on degenerate data."""

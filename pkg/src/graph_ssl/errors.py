"""Exception taxonomy shared across the package."""


class GraphSSLError(Exception):
    """Base class for all package errors."""


class DimensionError(GraphSSLError):
    """Operand shapes are incompatible."""


class NumericError(GraphSSLError):
    """A non-finite value appeared where finite math is required."""


class ContractError(GraphSSLError):
    """An API was used outside its documented contract."""


class ConfigError(GraphSSLError):
    """A configuration value is out of its valid range."""


class DataFormatError(GraphSSLError):
    """A dataset directory violates the on-disk format."""


class SamplingError(GraphSSLError):
    """A sampler could not produce the requested draw."""

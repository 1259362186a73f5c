"""Exception hierarchy shared across the toolkit.

The three base classes map onto the CLI exit codes: ConfigError -> 2,
DataError -> 3, DivergenceError -> 4.
"""


class DocvecError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DocvecError):
    """Invalid configuration or arguments."""


class DataError(DocvecError):
    """Malformed input data (parse, encoding or layout problems)."""


class LayoutError(DataError):
    """Shape/layout mismatch against a previously fitted artifact."""


class DivergenceError(DocvecError):
    """Numerical divergence during training (non-finite loss)."""

"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3. ShapeError is a configuration-class failure (bad
wiring, mismatched checkpoint/dataset) and also exits 1.
"""


class WindGatError(Exception):
    """Base class for all package errors."""


class ShapeError(WindGatError):
    """Operands or configured dimensions do not fit together."""


class NumericError(WindGatError):
    """A computation produced NaN/Inf or otherwise went numerically bad."""


class ConfigError(WindGatError):
    """Invalid run configuration or checkpoint."""


class DataError(WindGatError):
    """Malformed or inconsistent input data."""

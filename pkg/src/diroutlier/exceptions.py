"""Exception hierarchy shared by the library and the command line."""


class DirOutError(Exception):
    """Base class for all errors raised by diroutlier."""

    #: category reported by the CLI and mapped to an exit code
    category = "error"


class InputDataError(DirOutError, ValueError):
    """Malformed, non-finite or wrongly shaped input data."""

    category = "input"


class DegenerateDataError(DirOutError, ArithmeticError):
    """A robust scale (or MAD) is zero where a positive one is required."""

    category = "degenerate"


class ConfigError(DirOutError, ValueError):
    """Invalid tuning parameters or run configuration."""

    category = "config"

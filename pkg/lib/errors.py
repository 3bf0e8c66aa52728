"""Exception hierarchy shared by the library and the command-line application.

Every error carries the process exit code the application reports for it.
"""


class YaglomError(Exception):
    """Base class of all diagnostics errors."""

    exit_code = 3


class ConfigError(YaglomError, ValueError):
    """Invalid parameters or a violated precondition."""

    exit_code = 1


class FieldFileError(YaglomError, OSError):
    """A field file is missing, unreadable or inconsistent with its header."""

    exit_code = 2


class NumericalError(YaglomError, ArithmeticError):
    """A computation failed to produce a trustworthy number."""

    exit_code = 3

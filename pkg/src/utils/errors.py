"""
Exception hierarchy shared by every subpackage
"""


class MartError(Exception):
    """Base class for all errors raised by this package"""


class ConfigError(MartError, ValueError):
    """Invalid or inconsistent configuration value"""


class DimensionError(MartError, ValueError):
    """Array shapes do not fit the requested operation"""


class ContractError(MartError):
    """An API was called outside its documented contract"""


class EvaluationError(MartError):
    """A function under evaluation returned a non-finite value"""


class InvariantViolation(MartError):
    """A state that the model guarantees to be unreachable was reached"""


class DataError(MartError):
    """Training or evaluation data is unusable for the requested job"""


class ParseError(MartError):
    """
    Malformed input file

    Attributes:
        line: 1-based line number of the offending record (None if unknown)
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatError(MartError):
    """Well-formed record that violates the scene file schema"""


class VersionError(MartError):
    """Checkpoint format or configuration does not match the running model"""

from typing import Optional


class EsrfError(Exception):
    """Base class for every error raised by the library"""


class DomainError(EsrfError, ValueError):
    """A numeric argument is outside the range an operation accepts"""


class SchemaMismatch(EsrfError, ValueError):
    """An instance or stream does not agree with the expected schema"""


class ParseError(EsrfError, ValueError):
    """Malformed input file"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class UnsupportedAttribute(ParseError):
    """ARFF attribute type the readers do not handle (string, date, relational)"""


class UnknownNominalValue(ParseError):
    """A nominal token that is not in the declared value list"""

    def __init__(self, token: str, attribute: str, line_number: Optional[int] = None):
        self.token = token
        self.attribute = attribute
        super().__init__(f"unknown value '{token}' for attribute '{attribute}'", line_number)


class EmptyEnsemble(EsrfError, RuntimeError):
    """Prediction requested from an empty member set"""


class EmptyInput(EsrfError, ValueError):
    """Statistic requested over an empty sequence"""


class ConfigError(EsrfError, ValueError):
    """Invalid run configuration"""

    def __init__(self, key: str, constraint: str):
        self.key = key
        self.constraint = constraint
        super().__init__(f"{key}: {constraint}")


class EvaluationAborted(EsrfError, RuntimeError):
    """Learner or stream failure during a run; carries the partial timeline"""

    def __init__(self, message: str, timeline=None):
        self.timeline = timeline
        super().__init__(message)

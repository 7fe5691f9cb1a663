from typing import Optional


class SemanticMapError(Exception):
    """Base error for the mapping engine, mapped to a command line exit code."""

    exit_code: int = 3


class InputValidationError(SemanticMapError):
    """Malformed input: bad configuration, missing files, invalid records."""

    exit_code = 2


class DimensionMismatchError(InputValidationError):
    """An object vector does not have the length the map was built with."""

    def __init__(self, expected: int, got: int, what: str = "object vector") -> None:
        super().__init__(f"{what} has {got} components, expected {expected}")
        self.expected = expected
        self.got = got


class SequenceFormatError(InputValidationError):
    """A sequence document failed validation; carries the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line


class EmptyMapError(SemanticMapError):
    """Categorization was requested before the SOM learned any node."""

    def __init__(self, message: str = "no categories learned yet") -> None:
        super().__init__(message)

"""Error types shared across the package."""


class FacexprError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FacexprError):
    """Malformed input record; carries the 1-based line number when known."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class SchemaError(FacexprError):
    """Structurally valid input violating a field or shape constraint."""


class InsufficientFramesError(FacexprError):
    """Sequence shorter than the number of frames an operation requires."""


class ConfigError(FacexprError):
    """Invalid or inconsistent configuration."""


class FingerprintMismatchError(FacexprError):
    """Feature tensor, scaler, or model built against a different pair topology."""


class NumericError(FacexprError):
    """Non-finite value produced where the contract requires finite math."""

"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite intermediate value."""


class FormatError(ValueError):
    """A file does not match the expected on-disk layout.

    ``field`` names the header field or structural element at fault.
    """

    def __init__(self, message: str, field: str = ""):
        super().__init__(message)
        self.field = field


class DivergenceError(NumericError):
    """FxLMS error blew up.

    Carries the sample index where it was detected and the trace recorded
    up to (excluding) that sample.
    """

    def __init__(self, message: str, index: int, partial=None):
        super().__init__(message)
        self.index = index
        self.partial = partial

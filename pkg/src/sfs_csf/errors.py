"""Exception hierarchy shared by every module in the package."""


class SfsError(Exception):
    """Base class for all package errors."""


class ShapeError(SfsError, ValueError):
    """Layer or tensor dimensions are inconsistent."""


class FormatError(SfsError, ValueError):
    """A binary file does not follow its declared layout.

    The message always names the offending field.
    """

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        super().__init__(f"{field}: {detail}" if detail else field)


class RangeError(SfsError, ValueError):
    """A parameter or code lies outside its admissible range."""


class EncodingError(SfsError, ValueError):
    """Weights and codes disagree (e.g. a zero weight with a nonzero code)."""


class CorruptStream(SfsError, ValueError):
    """An entry stream cannot be decoded into in-range positions."""


class DivisionError(SfsError, ZeroDivisionError):
    """A ratio was requested over a zero denominator."""

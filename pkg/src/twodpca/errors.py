"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: config problems exit 2, data problems
exit 3 and numerical failures exit 4.
"""


class TwoDPCAError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(TwoDPCAError, ValueError):
    """Array data that is malformed: wrong shape, non-finite, asymmetric."""


class InvalidSpecError(TwoDPCAError, ValueError):
    """A parameter or configuration value outside its valid range."""


class FormatError(TwoDPCAError, ValueError):
    """A file on disk does not follow the expected format."""

    def __init__(self, path, message, offset=None):
        self.path = str(path)
        self.offset = offset
        where = self.path if offset is None else f"{self.path} @ byte {offset}"
        super().__init__(f"{where}: {message}")


class NumericFailureError(TwoDPCAError, ArithmeticError):
    """An iterative routine failed to converge or broke an invariant."""


class DegenerateDirectionError(NumericFailureError):
    """The fixed-point update produced an all-zero direction."""


class UndefinedRatioError(TwoDPCAError, ZeroDivisionError):
    """Reconstruction rate requested for an all-zero reference image."""

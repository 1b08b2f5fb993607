"""Exception types shared across the library.

The split mirrors the two ways a computation can go wrong: the caller
asked for something ill-posed (``ValidationError``), or a numerical
procedure failed to meet its own tolerance (``NumericalError``).  The
command line maps the former to exit code 2 and the latter to 3.
"""


class SpiketxError(Exception):
    """Base class for all errors raised by this library."""


class ValidationError(SpiketxError, ValueError):
    """Invalid input, configuration, or violated precondition."""


class NumericalError(SpiketxError, ArithmeticError):
    """Quadrature nonconvergence, recurrence breakdown, or a failed cross-check."""

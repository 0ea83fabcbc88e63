"""Exception hierarchy; the CLI maps each class to an exit code."""


class ChainboundError(Exception):
    exit_code = 3


class InputError(ChainboundError, ValueError):
    """Malformed document, violated precondition or invariant of user data."""

    exit_code = 1


class NumericalError(ChainboundError, ArithmeticError):
    """Overflow guard, tracking collapse and similar numeric breakdowns."""

    exit_code = 2

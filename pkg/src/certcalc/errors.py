"""Exception types shared across the library."""

from __future__ import annotations


class CertcalcError(Exception):
    """Base class for all library errors."""


class NotSeparatedFromZero(CertcalcError):
    """A separation-from-zero certificate failed.

    Raised when a reciprocal (or a guard that needs one) is asked for a
    quantity whose checking enclosure still contains 0.
    """


class NotSeparatedFromOne(CertcalcError):
    """A base was required to be separated from 1 and the check failed."""


class InvalidIntervalOrder(CertcalcError):
    """A carrier [x, y] was constructed with y certifiably below x."""


class LevelsTooLow(CertcalcError):
    """An upper range-partition sum was requested with its top level not
    certifiably above the supremum of the integrand."""


class BudgetExhausted(CertcalcError):
    """A refinement budget ran out before the requested accuracy was certified.

    The payload, when present, is the best still-sound result obtained.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class ParseError(CertcalcError):
    """Surface-syntax rejection, with position information when available."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position

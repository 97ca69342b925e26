"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class ZetaTransformsError(Exception):
    """Base class for all package errors."""


class PoleError(ZetaTransformsError, ZeroDivisionError):
    """Evaluation requested at (or too close to) a pole."""


class DomainError(ZetaTransformsError, ValueError):
    """Argument lies outside the region where the operation is defined."""


class NoConvergence(ZetaTransformsError, RuntimeError):
    """An adaptive procedure exhausted its budget before meeting its tolerance."""


class DivergentTail(ZetaTransformsError, ValueError):
    """An improper integral cannot converge for the supplied weight and growth."""


class BadGrowthBound(ZetaTransformsError, ValueError):
    """A caller-supplied growth hint makes the tail bound meaningless."""


class Underdetermined(ZetaTransformsError, ValueError):
    """Too few samples for the number of free coefficients."""


class SingularFit(ZetaTransformsError, ValueError):
    """Least-squares design matrix is rank deficient."""


class TableTooSmall(ZetaTransformsError, ValueError):
    """A precomputed table does not reach the requested index."""


class BadParams(ZetaTransformsError, ValueError):
    """Parameters violate a structural constraint of the operation."""


class WrongWeightPower(ZetaTransformsError, ValueError):
    """Spectral table weights encode a different power of the Hecke value."""


class ParseError(ZetaTransformsError, ValueError):
    """A data file line could not be parsed."""


class ValidationError(ZetaTransformsError, ValueError):
    """Parsed data violates an invariant."""


class CacheCorrupt(ZetaTransformsError, IOError):
    """A cache file failed its integrity check."""

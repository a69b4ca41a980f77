"""Exception types raised across the package."""
from __future__ import annotations

from dataclasses import dataclass, field


class MzForgeError(Exception):
    """Base class for all package errors."""


class InvalidInput(MzForgeError, ValueError):
    pass


class NotPSD(MzForgeError, ValueError):
    def __init__(self, min_eigenvalue: float):
        super().__init__(f"matrix is indefinite: smallest eigenvalue {min_eigenvalue:.3e}")
        self.min_eigenvalue = float(min_eigenvalue)


class IllConditioned(MzForgeError, ValueError):
    def __init__(self, min_eigenvalue: float, eps: float):
        super().__init__(
            f"smallest eigenvalue {min_eigenvalue:.3e} is below the threshold {eps:.1e}"
        )
        self.min_eigenvalue = float(min_eigenvalue)
        self.eps = float(eps)


class DegenerateChristoffel(MzForgeError, ValueError):
    """The Christoffel normalizer vanished at an evaluation point."""


class ZeroTail(MzForgeError, ValueError):
    """The spectrum has no mass beyond the truncation index."""


class SizeLimit(MzForgeError, ValueError):
    pass


class BigIntRequired(MzForgeError, OverflowError):
    """A factorial product exceeded signed 64-bit range."""


class NonExactDesign(MzForgeError, RuntimeError):
    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class Partial:
    """Outcome of a search that ran out of budget before deciding.

    ``scanned`` is the inclusive range of lattice sizes that were fully
    examined without success.
    """

    scanned: tuple[int, int]
    reason: str = "budget exhausted"
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return False

"""Exception hierarchy shared by every relkit module."""


class RelkitError(Exception):
    """Base class for all library errors."""


class InvalidAlgebra(RelkitError, ValueError):
    pass


class TableSizeMismatch(InvalidAlgebra):
    pass


class EntryOutOfRange(InvalidAlgebra):
    pass


class EmptyUniverse(InvalidAlgebra):
    pass


class ArityMismatch(RelkitError, ValueError):
    pass


class IndexOutOfRange(RelkitError, IndexError):
    pass


class NotSimilar(RelkitError, ValueError):
    pass


class CapExceeded(RelkitError):
    """A configured size or search cap was hit.

    ``reached`` carries the partial size (or node count) at the point of failure.
    """

    def __init__(self, message, reached=None):
        super().__init__(message)
        self.reached = reached


class NotACongruence(RelkitError, ValueError):
    pass


class NotAHomomorphism(RelkitError, ValueError):
    pass


class SizeMismatch(RelkitError, ValueError):
    pass


class NotAdmissible(RelkitError, ValueError):
    pass


class NotReflexive(RelkitError, ValueError):
    pass


class RankMismatch(RelkitError, ValueError):
    pass


class OperatorSyntaxError(RelkitError, SyntaxError):
    """Parse failure in operator text; ``position`` is a 0-based offset."""

    def __init__(self, message, text="", position=0):
        super().__init__(f"{message} at position {position}")
        self.text = text
        self.position = position


class UnknownVariable(RelkitError, KeyError):
    def __str__(self):
        return f"unknown relation variable {self.args[0]!r}"


class RegularityUnverified(RelkitError):
    """Theorem 2 and parts of Theorem 3 need a regular operator; the check failed."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvariantViolation(RelkitError, AssertionError):
    """An identity that must hold on every run did not."""


class UnsoundWitness(InvariantViolation):
    """A term accepted by the free-algebra criterion failed re-verification."""

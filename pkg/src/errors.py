"""Exceptions raised by the topos engine."""
from typing import Any, Optional, Sequence


class ToposError(Exception):
    """Base class for every error raised by toposcm."""


class DomainMismatch(ToposError):
    """Two arrows were expected to share a domain (or to compose) and do not."""


class CodomainMismatch(ToposError):
    """Two arrows were expected to share a codomain and do not."""


class NotParallel(ToposError):
    """An (co)equalizer was requested for a non-parallel pair."""


class SizeLimit(ToposError):
    """An exhaustive enumeration would exceed the configured cap."""

    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what}: {size} candidates exceeds the cap of {limit}")
        self.what = what
        self.size = size
        self.limit = limit


class UnknownObject(ToposError):
    """A category object (or named workspace entry) does not exist."""


class UnknownVariable(ToposError):
    """A causal variable is not declared by the model."""


class ValueOutOfDomain(ToposError):
    """A value is not a member of its variable's domain."""


class UnknownTuple(ToposError):
    """An exogenous tuple is not part of the model's U-tuple set."""


class CyclicModel(ToposError):
    """The endogenous dependency graph of an SCM has a cycle."""

    def __init__(self, cycle: Sequence[str]):
        super().__init__("cyclic dependency: " + " -> ".join(cycle))
        self.cycle = list(cycle)


class NotMonic(ToposError):
    """A square that should be a subobject has a non-injective component."""


class NotACone(ToposError):
    """A cone's triangles do not commute."""


class NoFactorization(ToposError):
    """No unique mediating morphism exists between two cones."""


class InvalidShape(ToposError):
    """A diagram's indexing category fails the category axioms."""


class ParentMismatch(ToposError):
    """Two subobjects live in different parents."""


class TypeMismatch(ToposError):
    """A term is ill-typed."""

    def __init__(self, message: str, subterm: Any = None,
                 expected: Any = None, actual: Any = None):
        detail = message
        if expected is not None or actual is not None:
            detail += f" (expected {expected}, got {actual})"
        super().__init__(detail)
        self.subterm = subterm
        self.expected = expected
        self.actual = actual


class MultipleFreeVars(ToposError):
    """Comprehension needs exactly one free variable."""


class UnknownWorld(ToposError):
    """A world is not part of the neighborhood system."""


class ParseError(ToposError):
    """Input text or JSON could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class ValidationError(ToposError):
    """A loaded object failed its module validator."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class UnknownCommand(ToposError):
    """The CLI pipeline was asked to run a command it does not know."""

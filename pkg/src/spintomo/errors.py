"""Exception hierarchy shared by all modules."""


class SpinTomoError(Exception):
    """Base class for every error raised by spintomo."""


class ShapeError(SpinTomoError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(SpinTomoError, ValueError):
    """An argument lies outside the domain of the operation."""


class IllPosedError(SpinTomoError, ValueError):
    """The data do not determine the requested quantity."""


class InvariantError(SpinTomoError, ArithmeticError):
    """A numerical result violated an invariant it must satisfy."""


class MissingDataError(SpinTomoError, KeyError):
    """A query asked for data that was never recorded."""

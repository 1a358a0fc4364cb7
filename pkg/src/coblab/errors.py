"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: usage problems exit 2, capacity
violations exit 3, invariant failures exit 4.
"""


class CoblabError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(CoblabError, ValueError):
    """Operands disagree in order, length or degree."""


class CapacityError(CoblabError):
    """An exact computation was requested above its enforced size cap."""


class InvariantError(CoblabError):
    """A structural invariant (legality, closure, identity) does not hold."""


class PreconditionError(CoblabError, ValueError):
    """Inputs fall outside the hypotheses of the checked statement."""

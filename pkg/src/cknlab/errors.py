"""Exception hierarchy shared by all modules."""


class CKNLabError(Exception):
    """Base class for every error raised by cknlab."""


class DomainError(CKNLabError, ValueError):
    """An input violates a mathematical precondition."""


class PairwisePathRequired(DomainError):
    """Fewer than three blocks with dimension >= 2: the cyclic Hoelder split
    does not apply and the two-block inequality must be used instead."""


class MemoryGuardError(CKNLabError, MemoryError):
    """A tensor grid would exceed the configured node budget."""


class SolverError(CKNLabError, RuntimeError):
    """A numerical solver broke down or hit its iteration cap."""

"""Exception types shared across the package."""


class InvariantError(ValueError):
    """An input object violates one of its structural invariants."""


class NumericalError(RuntimeError):
    """A numerical routine failed to produce a trustworthy answer."""

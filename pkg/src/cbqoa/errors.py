"""Exception types shared across the package."""


class CapacityError(ValueError):
    """A dense enumeration or simulation was requested beyond the supported size."""


class DegenerateInstanceError(ValueError):
    """Every feasible solution has the same cost, so relative quality is undefined."""

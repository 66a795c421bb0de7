"""Exception types shared across the simulator."""


class InvariantBreach(AssertionError):
    """A simulation invariant failed; the run is aborted."""


class EngineBug(InvariantBreach):
    """A node operation was invoked outside its precondition."""


class RoutingViolation(InvariantBreach):
    """A packet left the grid somewhere it must not."""

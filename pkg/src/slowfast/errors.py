"""Exception types shared across the package."""


class SlowFastError(Exception):
    """Base class for all package errors."""


class NonFiniteField(SlowFastError):
    def __init__(self, t, q, value):
        self.t, self.q, self.value = t, q, value
        super().__init__(f"field evaluated to {value} at t={t}, q={q}")


class NoBracket(SlowFastError):
    def __init__(self, event_id, ta, tb, ga, gb):
        self.event_id = event_id
        super().__init__(
            f"event {event_id!r}: no sign change on [{ta}, {tb}] (g={ga}, {gb})"
        )


class InvalidParameter(SlowFastError, ValueError):
    pass


class OutOfChart(SlowFastError, ValueError):
    pass


class SingularLog(SlowFastError, ValueError):
    pass


class BlowUp(SlowFastError):
    """Closed-form Bernoulli solution blows up before the requested time."""

    def __init__(self, t_low, t_high):
        self.bracket = (t_low, t_high)
        super().__init__(f"solution blows up for t in [{t_low}, {t_high}]")


class OracleMismatch(SlowFastError):
    def __init__(self, message, max_error=None):
        self.max_error = max_error
        super().__init__(message)


class MalformedTrajectory(SlowFastError):
    pass


class InsufficientData(SlowFastError):
    pass


class NotFoundWithinBudget(SlowFastError):
    """No witness found before the budget ran out. Not a disproof."""

    def __init__(self, message, crossings=0, a_n=(), passes=()):
        self.crossings = crossings
        self.a_n = list(a_n)
        self.passes = list(passes)
        super().__init__(message)


class IncompleteSummary(SlowFastError):
    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class NoTransitionInRange(SlowFastError):
    pass


class ConfigError(SlowFastError):
    pass

"""Exception hierarchy shared by all jncsim modules."""


class JncError(Exception):
    """Base class for jncsim errors."""


class EmptyCombination(JncError, ValueError):
    pass


class MixedSource(JncError, ValueError):
    pass


class UnknownLayer(JncError, ValueError):
    """The receiver holds neither layer of a collided packet."""


class ConfigError(JncError, ValueError):
    pass


class DomainError(JncError, ValueError):
    pass


class DivergentExpectation(JncError, ValueError):
    pass


class BudgetExceeded(JncError, RuntimeError):
    """A trial ran past its slot budget (usually p too close to 1)."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context


class ParseError(JncError, ValueError):
    pass

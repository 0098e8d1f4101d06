"""Exception types shared across the simulator."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition."""


class KnotSamplingError(DomainError):
    """A phase derivative was requested exactly on a pulse-shape discontinuity."""


class ConfigError(ValueError):
    """Invalid scenario configuration."""


class UsageError(ValueError):
    """Malformed request from the command line, such as an empty sweep range."""

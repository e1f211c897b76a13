"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid topology, traffic, energy or run configuration.

    ``key`` carries the dotted path of the offending entry when known.
    """

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ContractViolation(RuntimeError):
    """A caller broke an operation's precondition (usually a solver bug upstream)."""


class InfeasibleError(RuntimeError):
    """The per-slot program has no feasible point for the requested rate fraction."""


class SolverError(RuntimeError):
    """The conic solver failed to converge; ``residuals`` holds its last report."""

    def __init__(self, message, residuals=None):
        self.residuals = residuals or {}
        super().__init__(message)


class NullSpaceError(ValueError):
    """Zero-forcing direction requested for a UE whose null space is empty."""

    def __init__(self, ue, deficiency):
        self.ue = ue
        self.deficiency = deficiency
        super().__init__(
            f"UE {ue}: null space of the other scheduled channels is orthogonal "
            f"to its own channel (deficient by {deficiency} dimension(s))"
        )

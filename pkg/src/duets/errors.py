"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A factorization or eigendecomposition failed beyond repair."""


class ProtocolInvariantError(RuntimeError):
    """A distributed-protocol invariant was violated (empty active region,
    agent/server state mismatch, ...)."""


class ConfigError(ValueError):
    """An experiment configuration field failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")

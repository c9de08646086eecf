"""Shared exception types."""


class ConfigurationError(ValueError):
    """A parameter set violates a structural requirement (bad truncation,
    invalid lattice constants, contradictory options)."""


class NumericsError(RuntimeError):
    """An iterative or dense numerical routine failed to reach its
    advertised accuracy (non-convergence, blow-up, singular solve)."""

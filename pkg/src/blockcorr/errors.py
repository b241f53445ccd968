"""Exception types raised across the package."""


class BlockcorrError(Exception):
    """Base class for all package errors."""


class NonConvergence(BlockcorrError):
    """Adaptive quadrature exhausted its subdivision budget above tolerance."""


class NoBracket(BlockcorrError):
    """Root finder endpoints do not bracket a sign change."""


class InvalidGeometry(BlockcorrError):
    """A joint probability came out negative beyond round-off."""


class DegenerateCondition(BlockcorrError):
    """Conditioning event has zero probability (e.g. NLoS serving under LAP)."""


class NoServer(BlockcorrError):
    """Every BS in the scene delivers zero average power to the user."""


class InsufficientSamples(BlockcorrError):
    """Too few Monte Carlo scenes satisfied a conditioning event."""


class InvalidPathLoss(BlockcorrError, ValueError):
    """A custom path-loss pair violates monotonicity, dominance or boundedness."""


class ConfigError(BlockcorrError, ValueError):
    """Scenario configuration failed validation."""

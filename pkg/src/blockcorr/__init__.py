"""Coverage analysis of mmWave networks with correlated blockage."""

__version__ = "0.1.0"

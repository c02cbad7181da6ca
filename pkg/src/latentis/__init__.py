"""Classic and lightweight-deep latent variable models for process data."""

__version__ = "0.1.0"

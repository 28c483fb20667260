"""Risk-aware pessimistic offline policy learning for contextual bandits."""

__version__ = "0.1.0"

__all__ = ["__version__"]

"""Version information for tadi package."""

__version__ = "0.3.0"

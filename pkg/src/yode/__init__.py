"""Young integration and path-dependent Young differential equations."""

__version__ = "0.1.0"

"""softspace: map the software space of science from mention records."""

__version__ = "0.1.0"

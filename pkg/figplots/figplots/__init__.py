"""Figure rendering from the toolkit's CSV outputs."""

__version__ = "0.1.0"

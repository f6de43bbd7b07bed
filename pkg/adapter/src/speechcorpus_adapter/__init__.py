"""HTTP inference adapter for the speechcorpus provider wire protocol."""

__version__ = "0.1.0"

"""Two-color Hong-Ou-Mandel interference through a frequency converter."""

__version__ = "0.1.0"

"""Product-search relevance prediction."""

__version__ = "0.1.0"

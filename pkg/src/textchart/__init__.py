"""Turn analytical text into bar, pie and line chart specifications."""

__version__ = "0.1.0"

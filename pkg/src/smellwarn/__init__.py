"""Co-occurrence of static-analysis warnings and architectural smells."""

__version__ = "0.1.0"

"""Human-in-the-loop multi-agent engine for inductive thematic analysis."""

__version__ = "0.1.0"

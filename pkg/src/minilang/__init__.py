"""MiniLang: a minimal declarative proof language engine."""

__version__ = "0.1.0"

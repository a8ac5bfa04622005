"""A checker for dependent type theory with crisp (flat-modal) variables."""

__version__ = "0.1.0"

"""kls: key-leakage-storage rate regions for key agreement with hidden identifiers."""

__version__ = "0.1.0"

"""Semantic exception hierarchy shared by all kls modules."""


class KlsError(Exception):
    """Base class for all kls errors."""


class DistributionError(KlsError):
    """A probability vector or stochastic matrix failed validation."""


class DomainError(KlsError):
    """A scalar argument lies outside the mathematical domain of an operation."""


class UsageError(KlsError):
    """Inconsistent arguments: mismatched alphabets, overlapping axis sets, bad labels."""


class ResourceLimitError(KlsError):
    """A computation would exceed a configured enumeration or memory cap."""

"""Finite-alphabet probability toolkit.

Pmf / ConditionalPmf / JointPmf are immutable value types; every operation is
a pure function. All information quantities are in bits (log base 2), and
0*log(0) is treated as 0 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DistributionError, DomainError, ResourceLimitError, UsageError

# Probability vectors must sum to one within SUM_TOL; masses below ZERO_MASS
# are treated as exact zeros inside entropy sums to avoid log(0).
SUM_TOL = 1e-12
ZERO_MASS = 1e-15

# Dense joint arrays are capped at this many cells.
JOINT_CELL_CAP = 10_000_000

__all__ = [
    "Pmf",
    "ConditionalPmf",
    "JointPmf",
    "entropy",
    "binary_entropy",
    "binary_entropy_inv",
    "mutual_information",
    "conditional_entropy",
    "q_function",
    "SUM_TOL",
    "ZERO_MASS",
    "JOINT_CELL_CAP",
]


def _validated_prob_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DistributionError("probability vector must be a non-empty 1-D array")
    if np.any(arr < 0.0):
        raise DistributionError(f"negative probability mass: min={arr.min():g}")
    total = float(arr.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise DistributionError(f"probabilities sum to {total!r}, not 1 within {SUM_TOL:g}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over a finite alphabet indexed 0..n-1."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _validated_prob_vector(self.probs))

    @property
    def size(self) -> int:
        return self.probs.size

    def __getitem__(self, i: int) -> float:
        return float(self.probs[i])

    @staticmethod
    def uniform(n: int) -> "Pmf":
        return Pmf(np.full(n, 1.0 / n))

    @staticmethod
    def point_mass(i: int, n: int) -> "Pmf":
        probs = np.zeros(n)
        probs[i] = 1.0
        return Pmf(probs)


@dataclass(frozen=True)
class ConditionalPmf:
    """Row-stochastic matrix: matrix[x, y] = P(y | x)."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.matrix, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise DistributionError("conditional pmf must be a non-empty 2-D matrix")
        for x in range(arr.shape[0]):
            _validated_prob_vector(arr[x])
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "matrix", arr)

    @property
    def input_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    def row(self, x: int) -> Pmf:
        return Pmf(self.matrix[x])

    @staticmethod
    def identity(n: int) -> "ConditionalPmf":
        return ConditionalPmf(np.eye(n))


@dataclass(frozen=True)
class JointPmf:
    """Dense joint distribution over named finite variables.

    ``names`` labels the axes of ``mass`` in order; marginalizing any subset
    of axes yields another valid JointPmf.
    """

    names: tuple
    mass: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        if len(set(names)) != len(names):
            raise UsageError(f"duplicate variable names: {names}")
        arr = np.asarray(self.mass, dtype=float)
        if arr.ndim != len(names):
            raise UsageError(f"{len(names)} names for a {arr.ndim}-D mass array")
        if arr.size > JOINT_CELL_CAP:
            raise ResourceLimitError(f"joint has {arr.size} cells, cap is {JOINT_CELL_CAP}")
        if np.any(arr < -SUM_TOL):
            raise DistributionError(f"negative joint mass: min={arr.min():g}")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOL:
            raise DistributionError(f"joint mass sums to {total!r}, not 1 within {SUM_TOL:g}")
        arr = np.clip(arr, 0.0, None)
        arr.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "mass", arr)

    def _axes_of(self, names: Iterable[str]) -> list:
        out = []
        for name in names:
            if name not in self.names:
                raise UsageError(f"unknown variable {name!r}; have {self.names}")
            out.append(self.names.index(name))
        return out

    def marginal(self, names: Sequence[str]) -> "JointPmf":
        """Marginal joint over ``names``, axes reordered to match."""
        names = tuple(names)
        keep = self._axes_of(names)
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        summed = self.mass.sum(axis=drop) if drop else self.mass
        # summed axes follow self-order of the kept names; transpose to request order
        kept_in_self_order = [n for n in self.names if n in names]
        perm = [kept_in_self_order.index(n) for n in names]
        return JointPmf(names, np.transpose(summed, perm))

    def entropy_of(self, names: Sequence[str]) -> float:
        """Shannon entropy of the marginal over ``names``, in bits."""
        keep = self._axes_of(names)
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        summed = self.mass.sum(axis=drop) if drop else self.mass
        return _entropy_bits(summed)


def _entropy_bits(arr: np.ndarray) -> float:
    flat = np.asarray(arr, dtype=float).ravel()
    support = flat[flat > ZERO_MASS]
    if support.size == 0:
        return 0.0
    return max(0.0, float(-(support * np.log2(support)).sum()))


def entropy(p) -> float:
    """Shannon entropy H(p) in bits; accepts a Pmf or any valid probability vector."""
    if not isinstance(p, Pmf):
        p = Pmf(np.asarray(p, dtype=float))
    return _entropy_bits(p.probs)


def binary_entropy(p: float) -> float:
    """H_b(p) = -p log2 p - (1-p) log2(1-p); symmetric about 1/2."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary_entropy needs p in [0,1], got {p!r}")
    if p <= ZERO_MASS or p >= 1.0 - ZERO_MASS:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def binary_entropy_inv(h: float, max_iter: int = 200) -> float:
    """Inverse of H_b restricted to [0, 1/2], found by bisection.

    Monotone on [0, 1/2], so bisection converges unconditionally; 200
    iterations drive the bracket below floating-point resolution.
    """
    if not 0.0 <= h <= 1.0:
        raise DomainError(f"binary_entropy_inv needs h in [0,1], got {h!r}")
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:  # bracket at float resolution
            break
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mutual_information(joint: JointPmf, axes_a, axes_b) -> float:
    """I(A;B) in bits between two disjoint sets of variables of a joint."""
    a = _as_name_tuple(axes_a)
    b = _as_name_tuple(axes_b)
    if set(a) & set(b):
        raise UsageError(f"axis sets overlap: {a} vs {b}")
    value = joint.entropy_of(a) + joint.entropy_of(b) - joint.entropy_of(a + b)
    return max(0.0, value)


def conditional_entropy(joint: JointPmf, target, given) -> float:
    """H(target | given) in bits; ``given`` may be empty."""
    t = _as_name_tuple(target)
    g = _as_name_tuple(given)
    if set(t) & set(g):
        raise UsageError(f"axis sets overlap: {t} vs {g}")
    if not g:
        return joint.entropy_of(t)
    return max(0.0, joint.entropy_of(t + g) - joint.entropy_of(g))


def _as_name_tuple(names) -> tuple:
    if isinstance(names, str):
        return (names,)
    return tuple(names)


def q_function(x: float) -> float:
    """Standard normal tail probability Q(x), via the complementary error function."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))

"""Boundary curves of the key-leakage trade-off over test-channel families.

For a uniform binary hidden source measured through separate BSC(p) channels,
the boundary of the single-enrollment region is traced by binary symmetric
test channels: with crossover q between U and X~,

    key(q)     = 1 - H_b(q * p * p)          (I(U;Y), cascades written with *)
    leak(q)    = H_b(q * p * p) - H_b(q * p) (I(U;X) - I(U;Y))
    storage(q) = H_b(q * p * p) - H_b(q)     (I(U;X~) - I(U;Y))

Two-enrollment curves sum two such coordinates; asymmetric splits (q_1, q_2)
are optimized when comparing models at a fixed total rate.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .channels import awgn_to_bsc, bsc_star
from .errors import DomainError, ResourceLimitError, UsageError
from .probkit import binary_entropy, binary_entropy_inv
from .util import fmt_float, worker_count

GRID_CAP = 2_000_001

__all__ = [
    "SweepSpec",
    "CurvePoint",
    "Comparison",
    "optimal_test_channel_crossover",
    "enrollment_rates",
    "sweep_boundary",
    "min_two_enrollment_leakage",
    "max_two_enrollment_key",
    "compare_single_vs_two",
    "write_curve_csv",
    "CSV_HEADER",
]

CSV_HEADER = ("q", "key_rate", "leakage_rate", "storage_rate", "mode")


@dataclass(frozen=True)
class SweepSpec:
    """Sweep request: BSC test-channel family (default) or a general aux grid."""

    mode: str = "single"  # "single" | "two"
    p_a: Optional[float] = None
    snr_db: Optional[float] = None
    grid: object = 2001  # point count or explicit crossover list
    family: str = "bsc_test_channel"  # or "general_grid"

    def __post_init__(self):
        if self.mode not in ("single", "two"):
            raise UsageError(f"mode must be 'single' or 'two', got {self.mode!r}")
        if self.family not in ("bsc_test_channel", "general_grid"):
            raise UsageError(f"unknown family {self.family!r}")
        if (self.p_a is None) == (self.snr_db is None):
            raise UsageError("exactly one of p_a / snr_db must be given")

    @property
    def crossover(self) -> float:
        if self.p_a is not None:
            p = float(self.p_a)
            if not 0.0 <= p < 0.5:
                raise DomainError(f"p_a must lie in [0, 0.5), got {p!r}")
            return p
        return awgn_to_bsc(float(self.snr_db))

    def grid_values(self) -> np.ndarray:
        if isinstance(self.grid, (int, np.integer)):
            count = int(self.grid)
            if count < 2:
                raise UsageError("grid count must be at least 2")
            if count > GRID_CAP:
                raise ResourceLimitError(f"grid of {count} points exceeds cap {GRID_CAP}")
            return np.linspace(0.0, 0.5, count)
        values = np.asarray(sorted(float(v) for v in self.grid), dtype=float)
        if values.size < 2:
            raise UsageError("explicit crossover grid needs at least 2 points")
        if values.size > GRID_CAP:
            raise ResourceLimitError(f"grid of {values.size} points exceeds cap {GRID_CAP}")
        if values[0] < 0.0 or values[-1] > 0.5:
            raise DomainError("crossover grid must lie within [0, 0.5]")
        return values


@dataclass(frozen=True)
class CurvePoint:
    key_rate_total: float
    privacy_leakage_rate: float
    storage_rate_total: float
    test_channel_crossover: float


def optimal_test_channel_crossover(h_x_given_u: float, p_a: float) -> float:
    """Crossover of the reverse test channel achieving H(X|U) = h on the boundary."""
    if not 0.0 <= p_a < 0.5:
        raise DomainError(f"p_a must lie in [0, 0.5), got {p_a!r}")
    h_min = binary_entropy(p_a)
    if h_x_given_u < h_min - 1e-12:
        raise DomainError(
            f"no test channel reaches H(X|U)={h_x_given_u:g} below H_b(p_a)={h_min:g}"
        )
    if h_x_given_u > 1.0:
        raise DomainError(f"H(X|U) cannot exceed 1 bit, got {h_x_given_u!r}")
    q = (binary_entropy_inv(h_x_given_u) - p_a) / (1.0 - 2.0 * p_a)
    return min(0.5, max(0.0, q))


def enrollment_rates(q: float, p: float) -> tuple:
    """(key, leakage, storage) of one enrollment at test-channel crossover q."""
    far = binary_entropy(bsc_star(q, bsc_star(p, p)))
    near = binary_entropy(bsc_star(q, p))
    key = 1.0 - far
    leak = far - near
    storage = far - binary_entropy(q)
    return max(0.0, key), max(0.0, leak), max(0.0, storage)


def sweep_boundary(spec: SweepSpec) -> list:
    """Boundary curve points for the sweep request, sorted by total key rate."""
    if spec.family == "general_grid":
        return _sweep_general_grid(spec)
    p = spec.crossover
    qs = spec.grid_values()
    factor = 2.0 if spec.mode == "two" else 1.0

    def eval_q(q: float) -> CurvePoint:
        key, leak, storage = enrollment_rates(q, p)
        return CurvePoint(factor * key, factor * leak, factor * storage, float(q))

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(eval_q, qs))
    else:
        points = [eval_q(q) for q in qs]
    points.sort(key=lambda pt: pt.key_rate_total)
    return points


def _sweep_general_grid(spec: SweepSpec) -> list:
    """Fallback sweep over an auxiliary-channel lattice; no optimality claim.

    Enumerates P(u|x~) with |U| = |X~|+1 on a simplex lattice, evaluates the
    single/two-enrollment rates through exact joints, and keeps the lower
    leakage envelope.
    """
    from .channels import _simplex_lattice, bsc, separate_bc, EntitySystem
    from .probkit import ConditionalPmf, Pmf
    from .regions import AuxiliaryChannel, info_record

    p = spec.crossover
    resolution = spec.grid if isinstance(spec.grid, (int, np.integer)) else 8
    resolution = max(2, min(int(resolution), 24))
    sys = EntitySystem(Pmf.uniform(2), (separate_bc(bsc(p)), separate_bc(bsc(p))))
    rows = list(_simplex_lattice(resolution, 3))
    raw = []
    for r0 in rows:
        for r1 in rows:
            aux = AuxiliaryChannel(ConditionalPmf(np.vstack([r0, r1])))
            rec = info_record(sys, [aux, aux])
            key = rec.i_uy[0]
            leak = max(0.0, rec.i_ux[0] - rec.i_uy[0])
            storage = max(0.0, rec.i_uxt[0] - rec.i_uy[0])
            factor = 2.0 if spec.mode == "two" else 1.0
            raw.append(
                CurvePoint(factor * key, factor * leak, factor * storage, float("nan"))
            )
    raw.sort(key=lambda pt: (-pt.key_rate_total, pt.privacy_leakage_rate))
    envelope = []
    best = math.inf
    for pt in raw:
        if pt.privacy_leakage_rate < best - 1e-12:
            best = pt.privacy_leakage_rate
            envelope.append(pt)
    envelope.sort(key=lambda pt: pt.key_rate_total)
    return envelope


def _max_key(p: float) -> float:
    return 1.0 - binary_entropy(bsc_star(p, p))


def _q_of_key(key: float, p: float) -> float:
    """Test-channel crossover delivering the given per-enrollment key rate."""
    p2 = bsc_star(p, p)
    key = min(max(key, 0.0), _max_key(p))
    target = binary_entropy_inv(1.0 - key)
    q = (target - p2) / (1.0 - 2.0 * p2)
    return min(0.5, max(0.0, q))


def _leak_of_key(key: float, p: float) -> float:
    q = _q_of_key(key, p)
    return max(0.0, (1.0 - key) - binary_entropy(bsc_star(q, p)))


def _key_of_leak(leak: float, p: float) -> float:
    """Largest per-enrollment key rate whose leakage stays below ``leak``."""
    leak_max = _leak_of_key(_max_key(p), p)
    if leak >= leak_max:
        return _max_key(p)
    lo, hi = 0.0, _max_key(p)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _leak_of_key(mid, p) <= leak:
            lo = mid
        else:
            hi = mid
    return lo


def _golden_min(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section minimizer for a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def min_two_enrollment_leakage(
    total_key: float, p: float, coarse: int = 201
) -> tuple:
    """Minimal summed leakage of two enrollments at a fixed total key rate.

    Scans splits (key_1, key_2 = total - key_1) on a coarse grid, then
    refines with golden-section search; ties resolve toward the symmetric
    split.
    """
    kmax = _max_key(p)
    if total_key > 2.0 * kmax + 1e-12:
        raise DomainError(f"total key {total_key:g} exceeds the two-enrollment maximum")
    lo = max(0.0, total_key - kmax)
    hi = min(kmax, total_key)

    def f(k1: float) -> float:
        return _leak_of_key(k1, p) + _leak_of_key(total_key - k1, p)

    mid = 0.5 * total_key
    if lo >= hi:
        best = lo
    else:
        grid = np.linspace(lo, hi, coarse)
        values = [f(k) for k in grid]
        i = int(np.argmin(np.asarray(values) + 1e-15 * np.abs(grid - mid)))
        a = grid[max(0, i - 1)]
        b = grid[min(coarse - 1, i + 1)]
        best = _golden_min(f, a, b)
        if abs(f(mid) - f(best)) <= 1e-12:
            best = min(mid, hi) if mid >= lo else best
    k1 = best
    k2 = total_key - best
    return f(best), (_q_of_key(k1, p), _q_of_key(k2, p))


def max_two_enrollment_key(total_leak: float, p: float, coarse: int = 201) -> tuple:
    """Maximal summed key rate of two enrollments within a total leakage budget."""
    if total_leak < 0.0:
        raise DomainError("leakage budget must be nonnegative")
    leak_each_max = _leak_of_key(_max_key(p), p)
    lo = max(0.0, total_leak - leak_each_max)
    hi = min(leak_each_max, total_leak)

    def neg_key(l1: float) -> float:
        return -(_key_of_leak(l1, p) + _key_of_leak(total_leak - l1, p))

    if lo >= hi:
        best = hi
    else:
        grid = np.linspace(lo, hi, coarse)
        values = [neg_key(l) for l in grid]
        i = int(np.argmin(values))
        a = grid[max(0, i - 1)]
        b = grid[min(coarse - 1, i + 1)]
        best = _golden_min(neg_key, a, b)
        mid = 0.5 * total_leak
        if lo <= mid <= hi and abs(neg_key(mid) - neg_key(best)) <= 1e-12:
            best = mid
    l1 = best
    l2 = total_leak - best
    return -neg_key(best), (_q_of_key(_key_of_leak(l1, p), p), _q_of_key(_key_of_leak(l2, p), p))


@dataclass(frozen=True)
class Comparison:
    """Single- versus multi-enrollment comparison anchored at the single curve's corner.

    The corner is the single-enrollment boundary endpoint (identity test
    channel): its key rate is the reference total key for the leakage
    comparison, its leakage the reference budget for the key-rate comparison.
    ``corner_gain_grid_pct`` re-reads the key-rate gain from the gridded
    curves alone (nearest-point interpolation) as a resolution check.
    """

    p_single: float
    p_two: float
    snr_single: Optional[float]
    snr_two: Optional[float]
    enrollments: int
    curve_single: list
    curve_two: list
    reference_total_key: float
    leak_single_at_ref: float
    leak_two_at_ref: float
    leakage_reduction_pct: float
    corner_leak_single: float
    key_two_at_corner_leak: float
    corner_gain_pct: float
    corner_gain_grid_pct: float

    def summary_dict(self) -> dict:
        return {
            "p_single": self.p_single,
            "p_two": self.p_two,
            "snr_single": self.snr_single,
            "snr_two": self.snr_two,
            "enrollments": self.enrollments,
            "reference_total_key": self.reference_total_key,
            "leak_single_at_ref": self.leak_single_at_ref,
            "leak_two_at_ref": self.leak_two_at_ref,
            "leakage_reduction_pct": self.leakage_reduction_pct,
            "corner_leak_single": self.corner_leak_single,
            "key_two_at_corner_leak": self.key_two_at_corner_leak,
            "corner_gain_pct": self.corner_gain_pct,
            "corner_gain_grid_pct": self.corner_gain_grid_pct,
        }


def _grid_key_at_leak(points: Sequence[CurvePoint], leak: float) -> float:
    """Key rate at the given leakage read off a gridded curve by interpolation."""
    leaks = np.asarray([pt.privacy_leakage_rate for pt in points])
    keys = np.asarray([pt.key_rate_total for pt in points])
    order = np.argsort(leaks)
    return float(np.interp(leak, leaks[order], keys[order]))


def compare_single_vs_two(
    p_a: Optional[float] = None,
    snr_db: Optional[float] = None,
    grid: int = 2001,
    enrollments: int = 2,
) -> Comparison:
    """Compare the single-enrollment boundary with the summed multi-enrollment one.

    With ``p_a`` both models share the measurement channel. With ``snr_db``
    the multi-enrollment model runs at that SNR while the single enrollment
    gets the whole signal power, i.e. ``snr_db + 10 log10(enrollments)``.
    Reports the leakage reduction of the multi-enrollment model at the
    single curve's maximal key rate, and the key-rate gain of the single
    model at the same corner's leakage budget.
    """
    if enrollments < 1:
        raise UsageError("enrollments must be >= 1")
    if (p_a is None) == (snr_db is None):
        raise UsageError("exactly one of p_a / snr_db must be given")
    if p_a is not None:
        p_single = p_two = float(p_a)
        snr_single = snr_two = None
    else:
        snr_two = float(snr_db)
        snr_single = snr_two + 10.0 * math.log10(enrollments)
        p_two = awgn_to_bsc(snr_two)
        p_single = awgn_to_bsc(snr_single)

    spec_kw = {"p_a": p_single} if p_a is not None else {"snr_db": snr_single}
    curve_single = sweep_boundary(SweepSpec(mode="single", grid=grid, **spec_kw))
    spec_kw = {"p_a": p_two} if p_a is not None else {"snr_db": snr_two}
    curve_two = sweep_boundary(
        SweepSpec(mode="two" if enrollments == 2 else "single", grid=grid, **spec_kw)
    )

    corner_key = _max_key(p_single)
    corner_leak = _leak_of_key(corner_key, p_single)

    if enrollments == 1:
        leak_two = _leak_of_key(corner_key, p_two)
        key_two = _key_of_leak(corner_leak, p_two)
    else:
        leak_two, _ = min_two_enrollment_leakage(corner_key, p_two)
        key_two, _ = max_two_enrollment_key(corner_leak, p_two)

    reduction = 100.0 * (1.0 - leak_two / corner_leak) if corner_leak > 0 else 0.0
    gain = 100.0 * (corner_key / key_two - 1.0) if key_two > 0 else 0.0
    key_two_grid = _grid_key_at_leak(curve_two, corner_leak)
    gain_grid = 100.0 * (corner_key / key_two_grid - 1.0) if key_two_grid > 0 else 0.0

    return Comparison(
        p_single=p_single,
        p_two=p_two,
        snr_single=snr_single,
        snr_two=snr_two,
        enrollments=enrollments,
        curve_single=curve_single,
        curve_two=curve_two,
        reference_total_key=corner_key,
        leak_single_at_ref=corner_leak,
        leak_two_at_ref=leak_two,
        leakage_reduction_pct=reduction,
        corner_leak_single=corner_leak,
        key_two_at_corner_leak=key_two,
        corner_gain_pct=gain,
        corner_gain_grid_pct=gain_grid,
    )


def write_curve_csv(points: Sequence[CurvePoint], path: str, mode: str) -> None:
    """Write one curve as CSV with the header q,key_rate,leakage_rate,storage_rate,mode."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for pt in points:
            writer.writerow(
                [
                    fmt_float(pt.test_channel_crossover),
                    fmt_float(pt.key_rate_total),
                    fmt_float(pt.privacy_leakage_rate),
                    fmt_float(pt.storage_rate_total),
                    mode,
                ]
            )

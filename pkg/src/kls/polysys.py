"""Rate-constraint inequality systems: Fourier-Motzkin projection, exact LP,
vertex enumeration, redundancy certificates.

The random-binning achievability argument assigns three indices per entity
(key, helper, code) whose rates satisfy a small linear system in entropy
constants; eliminating the code rates yields the published reduced system
over (key, storage) rates. This module instantiates both systems from an
InfoRecord, verifies the projection, certifies which reduced constraints are
inactive, and checks the corner-point argument behind swapping a pair of
constraints for doubled-key variants.

Strict inequalities are handled as their closures (the regions are closures
of achievable sets). All arithmetic is exact over rationals: float constants
are quantized to multiples of 1e-12 on entry, so no certificate can flip on
rounding.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import ResourceLimitError, UsageError
from .regions import InfoRecord

QUANT = 10**12
FME_ROW_CAP = 2000

__all__ = [
    "LinearInequality",
    "InequalitySystem",
    "LpResult",
    "RedundancyCertificate",
    "CornerReplacementReport",
    "lp_max",
    "lp_feasible",
    "enumerate_vertices",
    "is_bounded",
    "fourier_motzkin",
    "implied_by",
    "systems_equivalent",
    "project_and_compare",
    "certify_redundancy",
    "build_theorem1_osrb",
    "build_theorem2_osrb",
    "reduced_two_enrollment_system",
    "INACTIVE_REDUCED_LABELS",
    "two_enrollment_corner",
    "corner_is_vertex",
    "verify_corner_replacement",
    "joint_secrecy_variant",
    "joint_secrecy_diagnostic",
]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(round(float(x) * QUANT), QUANT)


@dataclass(frozen=True)
class LinearInequality:
    """coeffs . x  (<= | >=)  rhs, with a unique label; ``strict`` is provenance only."""

    coeffs: tuple
    sense: str
    rhs: Fraction
    label: str
    strict: bool = False

    def __post_init__(self):
        if self.sense not in ("<=", ">="):
            raise UsageError(f"sense must be '<=' or '>=', got {self.sense!r}")
        object.__setattr__(self, "coeffs", tuple(_frac(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", _frac(self.rhs))

    def as_le(self) -> tuple:
        """(coeffs, rhs) with the sense normalized to <=."""
        if self.sense == "<=":
            return self.coeffs, self.rhs
        return tuple(-c for c in self.coeffs), -self.rhs


class InequalitySystem:
    """A list of labeled linear inequalities over named variables."""

    def __init__(self, variables: Sequence[str]):
        self.variables: Tuple[str, ...] = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise UsageError("duplicate variable names")
        self.inequalities: List[LinearInequality] = []

    def _coeff_vector(self, coeffs) -> tuple:
        if isinstance(coeffs, dict):
            unknown = set(coeffs) - set(self.variables)
            if unknown:
                raise UsageError(f"unknown variables {sorted(unknown)}")
            return tuple(_frac(coeffs.get(v, 0)) for v in self.variables)
        vec = tuple(_frac(c) for c in coeffs)
        if len(vec) != len(self.variables):
            raise UsageError("coefficient vector length must match variable count")
        return vec

    def add(self, coeffs, sense: str, rhs, label: str, strict: bool = False) -> None:
        if any(ineq.label == label for ineq in self.inequalities):
            raise UsageError(f"duplicate label {label!r}")
        self.inequalities.append(
            LinearInequality(self._coeff_vector(coeffs), sense, _frac(rhs), label, strict)
        )

    def add_nonneg(self) -> None:
        for i, v in enumerate(self.variables):
            coeffs = [0] * len(self.variables)
            coeffs[i] = 1
            self.add(coeffs, ">=", 0, f"nonneg:{v}")

    def labels(self) -> list:
        return [ineq.label for ineq in self.inequalities]

    def get(self, label: str) -> LinearInequality:
        for ineq in self.inequalities:
            if ineq.label == label:
                return ineq
        raise UsageError(f"no inequality labeled {label!r}")

    def without(self, labels: Iterable[str]) -> "InequalitySystem":
        drop = set(labels)
        missing = drop - set(self.labels())
        if missing:
            raise UsageError(f"no inequality labeled {sorted(missing)}")
        out = InequalitySystem(self.variables)
        out.inequalities = [iq for iq in self.inequalities if iq.label not in drop]
        return out

    def le_rows(self) -> list:
        """All inequalities normalized to <=: list of (coeffs, rhs, label)."""
        return [(*ineq.as_le(), ineq.label) for ineq in self.inequalities]

    def closure(self, strict_flags: Optional[bool] = None) -> "InequalitySystem":
        """Copy with all strict flags rewritten (solvers ignore them anyway)."""
        out = InequalitySystem(self.variables)
        for iq in self.inequalities:
            flag = iq.strict if strict_flags is None else strict_flags
            out.inequalities.append(
                LinearInequality(iq.coeffs, iq.sense, iq.rhs, iq.label, flag)
            )
        return out

    def to_dict(self) -> dict:
        return {
            "variables": list(self.variables),
            "inequalities": [
                {
                    "label": iq.label,
                    "coeffs": {v: float(c) for v, c in zip(self.variables, iq.coeffs) if c},
                    "sense": iq.sense,
                    "rhs": float(iq.rhs),
                    "strict": iq.strict,
                }
                for iq in self.inequalities
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @staticmethod
    def from_dict(data: dict) -> "InequalitySystem":
        out = InequalitySystem(tuple(data["variables"]))
        for iq in data["inequalities"]:
            out.add(iq["coeffs"], iq["sense"], iq["rhs"], iq["label"], iq.get("strict", False))
        return out


# ---------------------------------------------------------------------------
# Exact two-phase simplex (Bland's rule) for  max c.x  s.t.  A x <= b, x free.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "unbounded" | "infeasible"
    value: Optional[Fraction] = None
    point: Optional[tuple] = None


def _pivot(T, rhs, basis, row, col):
    piv = T[row][col]
    T[row] = [v / piv for v in T[row]]
    rhs[row] = rhs[row] / piv
    for r in range(len(T)):
        if r != row and T[r][col] != 0:
            factor = T[r][col]
            T[r] = [a - factor * b for a, b in zip(T[r], T[row])]
            rhs[r] = rhs[r] - factor * rhs[row]
    basis[row] = col


def _simplex(T, rhs, basis, obj) -> str:
    """Run simplex to optimality of ``obj`` (maximize); Bland's rule throughout."""
    m = len(T)
    n = len(obj)
    while True:
        # reduced costs r_j = obj_j - sum_i obj_basis[i] * T[i][j]
        dual = [obj[basis[i]] for i in range(m)]
        entering = -1
        for j in range(n):
            rc = obj[j]
            for i in range(m):
                if dual[i] != 0 and T[i][j] != 0:
                    rc -= dual[i] * T[i][j]
            if rc > 0:
                entering = j
                break
        if entering < 0:
            return "optimal"
        leaving = -1
        best = None
        for i in range(m):
            if T[i][entering] > 0:
                ratio = rhs[i] / T[i][entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded"
        _pivot(T, rhs, basis, leaving, entering)


def lp_max(system: InequalitySystem, objective) -> LpResult:
    """Maximize a linear objective over the system's feasible set (exact)."""
    rows = [(c, r) for c, r, _ in system.le_rows()]
    d = len(system.variables)
    if isinstance(objective, dict):
        unknown = set(objective) - set(system.variables)
        if unknown:
            raise UsageError(f"unknown objective variables {sorted(unknown)}")
        c_obj = [_frac(objective.get(v, 0)) for v in system.variables]
    else:
        c_obj = [_frac(c) for c in objective]
        if len(c_obj) != d:
            raise UsageError("objective length must match variable count")

    m = len(rows)
    # columns: u_1..u_d, v_1..v_d (x = u - v), slacks s_1..s_m, then artificials
    n_base = 2 * d + m
    T: List[list] = []
    rhs: List[Fraction] = []
    basis: List[int] = []
    art_cols: List[int] = []
    n_total = n_base
    for i, (coeffs, beta) in enumerate(rows):
        row = [Fraction(0)] * n_base
        sign = 1 if beta >= 0 else -1
        for k in range(d):
            row[k] = sign * coeffs[k]
            row[d + k] = -sign * coeffs[k]
        row[2 * d + i] = Fraction(sign)
        T.append(row)
        rhs.append(sign * beta)
        if sign == 1:
            basis.append(2 * d + i)
        else:
            art_cols.append(n_total)
            basis.append(n_total)
            n_total += 1
    if art_cols:
        for i, row in enumerate(T):
            row.extend([Fraction(0)] * len(art_cols))
        for i in range(m):
            if basis[i] >= n_base:
                T[i][basis[i]] = Fraction(1)
        phase1 = [Fraction(0)] * n_total
        for col in art_cols:
            phase1[col] = Fraction(-1)
        _simplex(T, rhs, basis, phase1)
        value = sum(rhs[i] for i in range(m) if basis[i] in set(art_cols))
        if value != 0:
            return LpResult("infeasible")
        # pivot remaining artificials out of the basis (they sit at level 0)
        art_set = set(art_cols)
        for i in range(m):
            if basis[i] in art_set:
                pivot_col = next(
                    (j for j in range(n_base) if T[i][j] != 0), None
                )
                if pivot_col is not None:
                    _pivot(T, rhs, basis, i, pivot_col)
        keep = [i for i in range(m) if basis[i] not in art_set]
        T = [[T[i][j] for j in range(n_base)] for i in keep]
        rhs = [rhs[i] for i in keep]
        basis = [basis[i] for i in keep]
        m = len(T)
        n_total = n_base

    obj = [Fraction(0)] * n_total
    for k in range(d):
        obj[k] = c_obj[k]
        obj[d + k] = -c_obj[k]
    status = _simplex(T, rhs, basis, obj)
    if status == "unbounded":
        return LpResult("unbounded")
    x = [Fraction(0)] * d
    for i in range(m):
        if basis[i] < d:
            x[basis[i]] += rhs[i]
        elif basis[i] < 2 * d:
            x[basis[i] - d] -= rhs[i]
    value = sum(c * xi for c, xi in zip(c_obj, x))
    return LpResult("optimal", value, tuple(x))


def lp_feasible(system: InequalitySystem) -> bool:
    return lp_max(system, [0] * len(system.variables)).status == "optimal"


def is_bounded(system: InequalitySystem) -> bool:
    """True iff the feasible set is bounded (and nonempty) in every coordinate."""
    if not lp_feasible(system):
        return False
    d = len(system.variables)
    for k in range(d):
        for sign in (1, -1):
            obj = [0] * d
            obj[k] = sign
            if lp_max(system, obj).status != "optimal":
                return False
    return True


def _solve_square(rows: Sequence[tuple], rhs: Sequence[Fraction]) -> Optional[tuple]:
    """Exact Gaussian elimination; None if the system is singular."""
    d = len(rhs)
    M = [list(rows[i]) + [rhs[i]] for i in range(d)]
    for col in range(d):
        pivot_row = next((r for r in range(col, d) if M[r][col] != 0), None)
        if pivot_row is None:
            return None
        M[col], M[pivot_row] = M[pivot_row], M[col]
        piv = M[col][col]
        M[col] = [v / piv for v in M[col]]
        for r in range(d):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [a - factor * b for a, b in zip(M[r], M[col])]
    return tuple(M[r][d] for r in range(d))


def enumerate_vertices(system: InequalitySystem) -> list:
    """All vertices of the polyhedron, by brute-force basis enumeration (exact)."""
    rows = system.le_rows()
    d = len(system.variables)
    if len(rows) < d:
        return []
    seen = set()
    out = []
    for combo in itertools.combinations(range(len(rows)), d):
        point = _solve_square([rows[i][0] for i in combo], [rows[i][1] for i in combo])
        if point is None:
            continue
        if point in seen:
            continue
        feasible = all(
            sum(c * x for c, x in zip(coeffs, point)) <= rhs for coeffs, rhs, _ in rows
        )
        if feasible:
            seen.add(point)
            out.append(point)
    out.sort()
    return out


# ---------------------------------------------------------------------------
# Fourier-Motzkin elimination
# ---------------------------------------------------------------------------


def _normalize_row(coeffs: tuple, rhs: Fraction) -> tuple:
    """Scale so the first nonzero coefficient is +-1 (canonical for dedup)."""
    lead = next((c for c in coeffs if c != 0), None)
    if lead is None:
        return coeffs, rhs
    scale = abs(lead)
    return tuple(c / scale for c in coeffs), rhs / scale


def _prune_redundant(rows: list, variables: tuple) -> list:
    """Drop rows implied by the rest (safe one-at-a-time removal)."""
    kept = list(rows)
    changed = True
    while changed:
        changed = False
        for idx in range(len(kept)):
            coeffs, rhs, label = kept[idx]
            rest = kept[:idx] + kept[idx + 1 :]
            if not rest:
                break
            sub = InequalitySystem(variables)
            for i, (c, r, lbl) in enumerate(rest):
                sub.add(c, "<=", r, f"row{i}")
            res = lp_max(sub, list(coeffs))
            if res.status == "optimal" and res.value <= rhs:
                kept.pop(idx)
                changed = True
                break
    return kept


def fourier_motzkin(
    system: InequalitySystem,
    eliminate: Iterable[str],
    row_cap: int = FME_ROW_CAP,
    prune: bool = True,
) -> InequalitySystem:
    """Project the feasible set onto the variables not in ``eliminate``.

    Combines every lower bound on an eliminated variable with every upper
    bound, dedupes canonical rows, and (optionally) LP-prunes redundant rows
    after each elimination step to keep the blow-up in check.
    """
    eliminate = list(eliminate)
    unknown = set(eliminate) - set(system.variables)
    if unknown:
        raise UsageError(f"cannot eliminate unknown variables {sorted(unknown)}")
    variables = system.variables
    rows = [(coeffs, rhs, label) for coeffs, rhs, label in system.le_rows()]
    counter = itertools.count()
    for name in eliminate:
        idx = variables.index(name)
        pos = [r for r in rows if r[0][idx] > 0]
        neg = [r for r in rows if r[0][idx] < 0]
        zero = [r for r in rows if r[0][idx] == 0]
        new_rows = list(zero)
        for cu, ru, _ in pos:
            for cl, rl, _ in neg:
                scale_u = -cl[idx]
                scale_l = cu[idx]
                coeffs = tuple(
                    scale_u * a + scale_l * b for a, b in zip(cu, cl)
                )
                rhs = scale_u * ru + scale_l * rl
                if all(c == 0 for c in coeffs):
                    if rhs < 0:
                        # projection is empty; keep the contradiction row
                        new_rows.append((coeffs, rhs, f"elim{next(counter)}"))
                    continue
                coeffs, rhs = _normalize_row(coeffs, rhs)
                new_rows.append((coeffs, rhs, f"elim{next(counter)}"))
        # dominance dedup: identical coefficient vectors keep the smallest rhs
        best: Dict[tuple, tuple] = {}
        for coeffs, rhs, label in new_rows:
            cur = best.get(coeffs)
            if cur is None or rhs < cur[0]:
                best[coeffs] = (rhs, label)
        rows = [(coeffs, rhs, label) for coeffs, (rhs, label) in best.items()]
        if len(rows) > row_cap:
            raise ResourceLimitError(f"FME grew to {len(rows)} rows, cap {row_cap}")
        if prune:
            rows = _prune_redundant(rows, variables)
    remaining = [v for v in variables if v not in eliminate]
    keep_idx = [variables.index(v) for v in remaining]
    out = InequalitySystem(tuple(remaining))
    for i, (coeffs, rhs, label) in enumerate(rows):
        if any(coeffs[variables.index(v)] != 0 for v in eliminate):
            raise UsageError("internal: eliminated variable survived projection")
        out.add([coeffs[k] for k in keep_idx], "<=", rhs, f"proj:{i}")
    return out


def implied_by(ineq_coeffs, ineq_rhs, system: InequalitySystem, tol: float = 1e-9) -> bool:
    """True iff coeffs.x <= rhs holds everywhere on the system's feasible set."""
    res = lp_max(system, list(ineq_coeffs))
    if res.status == "unbounded":
        return False
    if res.status == "infeasible":
        return True
    return float(res.value) <= float(ineq_rhs) + tol


def systems_equivalent(a: InequalitySystem, b: InequalitySystem, tol: float = 1e-9) -> bool:
    """Mutual LP inclusion: same variables, same feasible set within tol."""
    if set(a.variables) != set(b.variables):
        raise UsageError("systems must share a variable set")
    order = a.variables

    def reordered(sys: InequalitySystem):
        perm = [sys.variables.index(v) for v in order]
        return [
            (tuple(coeffs[k] for k in perm), rhs) for coeffs, rhs, _ in sys.le_rows()
        ]

    rows_a = reordered(a)
    rows_b = reordered(b)
    sys_a = InequalitySystem(order)
    for i, (c, r) in enumerate(rows_a):
        sys_a.add(c, "<=", r, f"a{i}")
    sys_b = InequalitySystem(order)
    for i, (c, r) in enumerate(rows_b):
        sys_b.add(c, "<=", r, f"b{i}")
    for coeffs, rhs in rows_b:
        if not implied_by(coeffs, rhs, sys_a, tol):
            return False
    for coeffs, rhs in rows_a:
        if not implied_by(coeffs, rhs, sys_b, tol):
            return False
    return True


def project_and_compare(
    raw: InequalitySystem,
    eliminate: Iterable[str],
    reduced: InequalitySystem,
    tol: float = 1e-9,
) -> bool:
    """True iff eliminating ``eliminate`` from raw yields exactly ``reduced``."""
    projected = fourier_motzkin(raw, eliminate)
    return systems_equivalent(projected, reduced, tol)


@dataclass(frozen=True)
class RedundancyCertificate:
    target_label: str
    redundant: bool
    lp_optimum: Optional[float]
    rhs: float
    unbounded: bool
    active_labels: tuple

    def describe(self) -> str:
        if self.unbounded:
            return f"{self.target_label}: NOT redundant (objective unbounded without it)"
        verdict = "redundant" if self.redundant else "NOT redundant"
        return (
            f"{self.target_label}: {verdict} "
            f"(max LHS {self.lp_optimum:.9f} vs rhs {self.rhs:.9f}; "
            f"active: {', '.join(self.active_labels) or 'none'})"
        )


def certify_redundancy(
    system: InequalitySystem, label: str, tol: float = 1e-9
) -> RedundancyCertificate:
    """LP-certify whether one inequality is implied by all the others."""
    target = system.get(label)
    coeffs, rhs = target.as_le()
    rest = system.without([label])
    res = lp_max(rest, list(coeffs))
    if res.status == "unbounded":
        return RedundancyCertificate(label, False, None, float(rhs), True, ())
    if res.status == "infeasible":
        return RedundancyCertificate(label, True, None, float(rhs), False, ())
    active = []
    for c, r, lbl in rest.le_rows():
        value = sum(ci * xi for ci, xi in zip(c, res.point))
        if abs(float(value - r)) <= tol:
            active.append(lbl)
    redundant = float(res.value) <= float(rhs) + tol
    return RedundancyCertificate(
        label, redundant, float(res.value), float(rhs), False, tuple(active)
    )


# ---------------------------------------------------------------------------
# System builders from an InfoRecord
# ---------------------------------------------------------------------------


def build_theorem1_osrb(rec: InfoRecord, j: int) -> InequalitySystem:
    """Three-index binning constraints of entity j in the multi-entity scheme.

    Decoding needs helper+code rates above H(U_j|Y_j); index independence
    caps key+helper+code below H(U_j|U_rest); the code rate stays below
    H(U_j|X~_j) so the codebook index tells nothing about the measurement.
    """
    if not 0 <= j < rec.entity_count:
        raise UsageError(f"entity index {j} out of range")
    tag = j + 1
    sys = InequalitySystem((f"Rs{tag}", f"Rw{tag}", f"Rc{tag}"))
    sys.add({f"Rw{tag}": 1, f"Rc{tag}": 1}, ">=", rec.h_u_given_y(j), f"sw:j={tag}", strict=True)
    sys.add(
        {f"Rs{tag}": 1, f"Rw{tag}": 1, f"Rc{tag}": 1},
        "<=",
        rec.h_u_given_rest[j],
        f"independence:j={tag}",
        strict=True,
    )
    sys.add({f"Rc{tag}": 1}, "<=", rec.h_u_given_xt(j), f"code:j={tag}", strict=True)
    sys.add_nonneg()
    return sys


def build_theorem2_osrb(rec: InfoRecord) -> InequalitySystem:
    """Six-index binning constraints of the two-enrollment scheme.

    Per enrollment: decoding and per-key uniformity bounds; two cross
    constraints make each key independent of both helper/code pairs jointly
    (virtual joint encoder over (U_1, U_2)); code rates bounded as before.
    """
    if rec.entity_count != 2:
        raise UsageError("two-enrollment system needs exactly 2 entities")
    h12 = rec.pair_entropy(0, 1)
    sys = InequalitySystem(("Rs1", "Rw1", "Rc1", "Rs2", "Rw2", "Rc2"))
    for j in (0, 1):
        tag = j + 1
        sys.add(
            {f"Rw{tag}": 1, f"Rc{tag}": 1}, ">=", rec.h_u_given_y(j), f"sw:j={tag}", strict=True
        )
        sys.add(
            {f"Rs{tag}": 1, f"Rw{tag}": 1, f"Rc{tag}": 1},
            "<=",
            rec.h_u[j],
            f"uniformity:j={tag}",
            strict=True,
        )
    for j in (0, 1):
        tag, other = j + 1, 2 - j
        sys.add(
            {
                f"Rs{tag}": 1,
                f"Rw{tag}": 1,
                f"Rc{tag}": 1,
                f"Rw{other}": 1,
                f"Rc{other}": 1,
            },
            "<=",
            h12,
            f"cross:j={tag}",
            strict=True,
        )
    for j in (0, 1):
        tag = j + 1
        sys.add({f"Rc{tag}": 1}, "<=", rec.h_u_given_xt(j), f"code:j={tag}", strict=True)
    sys.add_nonneg()
    return sys


#: Reduced-system constraints the corner-point analysis shows to be inactive
#: for symmetric records (implied by the key and own-pair bounds).
INACTIVE_REDUCED_LABELS = (
    "key_joint_residual:j=1",
    "key_joint_residual:j=2",
    "own_pair_joint_ub:j=1",
    "own_pair_joint_ub:j=2",
)


def reduced_two_enrollment_system(
    rec: InfoRecord, replacement: bool = False
) -> InequalitySystem:
    """The code-rate-eliminated two-enrollment system over (Rs1, Rw1, Rs2, Rw2).

    With ``replacement`` the two cross pair bounds (key of one enrollment
    plus the other's storage) are swapped for their doubled-key variants,
    the form whose corner points the inactivity argument compares.
    """
    if rec.entity_count != 2:
        raise UsageError("two-enrollment system needs exactly 2 entities")
    h12 = rec.pair_entropy(0, 1)
    sys = InequalitySystem(("Rs1", "Rw1", "Rs2", "Rw2"))
    for j in (0, 1):
        tag, other = j + 1, 2 - j
        k = 1 - j
        sys.add(
            {f"Rw{tag}": 1},
            ">=",
            rec.h_u_given_y(j) - rec.h_u_given_xt(j),
            f"storage_lb:j={tag}",
            strict=True,
        )
        sys.add({f"Rs{tag}": 1}, "<=", rec.i_uy[j], f"key_ub:j={tag}", strict=True)
        sys.add(
            {f"Rs{tag}": 1},
            "<=",
            h12 - rec.h_u_given_y(0) - rec.h_u_given_y(1),
            f"key_joint_residual:j={tag}",
            strict=True,
        )
        if replacement:
            sys.add(
                {f"Rs{tag}": 2, f"Rw{tag}": 1, f"Rw{other}": 1},
                "<=",
                rec.i_uy[j] + h12,
                f"doubled_key_sum_ub:j={tag}",
                strict=True,
            )
        else:
            sys.add(
                {f"Rs{tag}": 1, f"Rw{other}": 1},
                "<=",
                h12 - rec.h_u_given_y(j),
                f"cross_pair_ub:j={tag}",
                strict=True,
            )
        sys.add(
            {f"Rs{tag}": 1, f"Rw{tag}": 1}, "<=", rec.h_u[j], f"own_pair_ub:j={tag}", strict=True
        )
        sys.add(
            {f"Rs{tag}": 1, f"Rw{tag}": 1},
            "<=",
            h12 - rec.h_u_given_y(k),
            f"own_pair_joint_ub:j={tag}",
            strict=True,
        )
        sys.add(
            {f"Rs{tag}": 1, f"Rw{tag}": 1, f"Rw{other}": 1},
            "<=",
            h12,
            f"total_sum_ub:j={tag}",
            strict=True,
        )
    sys.add_nonneg()
    return sys


def two_enrollment_corner(rec: InfoRecord) -> dict:
    """Corner rate assignment: keys at I(U_j;Y_j), storage at I(U_j;X~_j)-I(U_j;Y_j)."""
    if rec.entity_count != 2:
        raise UsageError("two-enrollment corner needs exactly 2 entities")
    return {
        "Rs1": rec.i_uy[0],
        "Rw1": rec.i_uxt[0] - rec.i_uy[0],
        "Rs2": rec.i_uy[1],
        "Rw2": rec.i_uxt[1] - rec.i_uy[1],
    }


def corner_is_vertex(rec: InfoRecord, tol: float = 1e-8) -> bool:
    """Is the corner assignment a vertex of the reduced system (within tol)?"""
    import numpy as np

    sys = reduced_two_enrollment_system(rec)
    corner = two_enrollment_corner(rec)
    point = [corner[v] for v in sys.variables]
    active = []
    for coeffs, rhs, label in sys.le_rows():
        value = sum(float(c) * x for c, x in zip(coeffs, point))
        if value > float(rhs) + tol:
            return False
        if abs(value - float(rhs)) <= tol:
            active.append([float(c) for c in coeffs])
    if len(active) < len(sys.variables):
        return False
    rank = np.linalg.matrix_rank(np.asarray(active), tol=1e-10)
    return rank == len(sys.variables)


@dataclass(frozen=True)
class CornerReplacementReport:
    """Outcome of the vertex-set comparison behind the cross-bound replacement."""

    status: str  # "verified" | "refuted" | "skipped" | "unbounded"
    same_vertices: Optional[bool]
    detail: str
    extra_vertices: tuple = ()

    @property
    def passed(self) -> bool:
        return self.status == "verified"

    def __bool__(self) -> bool:
        return self.passed


def _record_symmetric(rec: InfoRecord, tol: float) -> bool:
    return (
        rec.entity_count == 2
        and rec.product_two_enrollment
        and abs(rec.h_u[0] - rec.h_u[1]) <= tol
        and abs(rec.i_uy[0] - rec.i_uy[1]) <= tol
        and abs(rec.i_uxt[0] - rec.i_uxt[1]) <= tol
    )


def verify_corner_replacement(
    rec: InfoRecord, tol: float = 1e-8, sym_tol: float = 1e-9
) -> CornerReplacementReport:
    """Compare vertex sets of the reduced system and its doubled-key variant.

    Gated on symmetric records (same construction and statistics for both
    enrollments); asymmetric records are reported as skipped rather than
    guessed at.
    """
    if not _record_symmetric(rec, sym_tol):
        return CornerReplacementReport(
            "skipped", None, "record is not a symmetric two-enrollment instance"
        )
    sys_a = reduced_two_enrollment_system(rec, replacement=False)
    sys_b = reduced_two_enrollment_system(rec, replacement=True)
    for name, sys in (("original", sys_a), ("replacement", sys_b)):
        if not is_bounded(sys):
            return CornerReplacementReport(
                "unbounded", None, f"{name} reduced system is unbounded or empty"
            )
    va = [tuple(float(c) for c in v) for v in enumerate_vertices(sys_a)]
    vb = [tuple(float(c) for c in v) for v in enumerate_vertices(sys_b)]

    def match(vs, ws):
        unmatched = []
        for v in vs:
            if not any(max(abs(a - b) for a, b in zip(v, w)) <= tol for w in ws):
                unmatched.append(v)
        return unmatched

    only_a = match(va, vb)
    only_b = match(vb, va)
    same = not only_a and not only_b
    detail = (
        f"{len(va)} vs {len(vb)} vertices; "
        f"{len(only_a)} only in original, {len(only_b)} only in replacement"
    )
    return CornerReplacementReport(
        "verified" if same else "refuted",
        same,
        detail,
        tuple(only_a + only_b),
    )


def joint_secrecy_variant(rec: InfoRecord) -> InequalitySystem:
    """Two-enrollment system with the cross bounds replaced by one joint bound.

    Demanding secrecy of both keys against both helper/code pairs at once
    caps the sum of all six index rates by H(U_1,U_2), which collides with
    the per-enrollment uniformity bounds whenever the measurements are
    correlated; the diagnostic below quantifies the key-rate loss.
    """
    sys = build_theorem2_osrb(rec)
    out = sys.without(["cross:j=1", "cross:j=2"])
    out.add(
        {"Rs1": 1, "Rw1": 1, "Rc1": 1, "Rs2": 1, "Rw2": 1, "Rc2": 1},
        "<=",
        rec.pair_entropy(0, 1),
        "joint_secrecy",
        strict=True,
    )
    return out


def joint_secrecy_diagnostic(rec: InfoRecord) -> dict:
    """Max achievable key sum under per-key vs joint secrecy accounting."""
    objective = {"Rs1": 1, "Rs2": 1}
    std = lp_max(build_theorem2_osrb(rec), objective)
    joint = lp_max(joint_secrecy_variant(rec), objective)
    corner_sum = rec.i_uy[0] + rec.i_uy[1]
    max_std = float(std.value) if std.status == "optimal" else None
    max_joint = float(joint.value) if joint.status == "optimal" else None
    return {
        "max_key_sum": max_std,
        "max_key_sum_joint_secrecy": max_joint,
        "corner_key_sum": corner_sum,
        "corner_feasible_under_joint_secrecy": (
            max_joint is not None and max_joint >= corner_sum - 1e-9
        ),
    }

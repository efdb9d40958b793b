"""Rate-region evaluation for multi-entity and two-enrollment key agreement.

An InfoRecord collects every information quantity the bound families need,
computed by exact marginalization of the joint law

    P(u_1..u_J, x~_1..x~_J, x, y_1..y_J)
        = P(x) * prod_j P(x~_j, y_j | x) * P(u_j | x~_j).

Three constraint families are evaluated against rate tuples:

* ``thm1:*``  -- multi-entity inner bounds (GS and CS models), with the
  mutual-key-independence penalty I(U_j; U_rest) on every key rate;
* ``lem1:*``  -- outer bounds valid for physically degraded / less-noisy
  channels (strong privacy: zero leakage floor);
* ``thm2:*``  -- two-enrollment inner/outer bounds for separate measurement
  channels sharing one transition matrix (per-key secrecy, no key
  independence constraint).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channels import ChannelClass, EntitySystem
from .errors import DomainError, UsageError
from .probkit import ConditionalPmf, JointPmf, conditional_entropy, mutual_information

__all__ = [
    "AuxiliaryChannel",
    "RateTuple",
    "InfoRecord",
    "MembershipReport",
    "info_joint",
    "info_record",
    "eval_multi_entity_inner",
    "eval_pd_ln_outer",
    "eval_two_enrollment",
    "gs_corner_point",
]


@dataclass(frozen=True)
class AuxiliaryChannel:
    """Test channel P(u | x~) parameterizing points of the rate regions."""

    cond: ConditionalPmf

    @property
    def aux_cardinality(self) -> int:
        return self.cond.output_size

    @staticmethod
    def identity(n: int) -> "AuxiliaryChannel":
        return AuxiliaryChannel(ConditionalPmf.identity(n))

    @staticmethod
    def bsc_test(q: float) -> "AuxiliaryChannel":
        """Binary symmetric test channel with crossover q.

        For a uniform binary source measured through symmetric channels this
        parameterization coincides with prescribing the reverse channel
        P(x~ | u) as a BSC(q), the family that traces the region boundary.
        """
        from .channels import bsc

        return AuxiliaryChannel(bsc(q))

    @staticmethod
    def constant(n_in: int, n_out: int = 2) -> "AuxiliaryChannel":
        """U independent of X~ (all rows equal): every information term vanishes."""
        return AuxiliaryChannel(ConditionalPmf(np.full((n_in, n_out), 1.0 / n_out)))


@dataclass(frozen=True)
class RateTuple:
    """(key rates, privacy-leakage rate, storage rates), all in bits/symbol."""

    key_rates: tuple
    privacy_leakage: float
    storage_rates: tuple

    def __post_init__(self):
        keys = tuple(float(r) for r in self.key_rates)
        stores = tuple(float(r) for r in self.storage_rates)
        if any(r < 0 for r in keys) or any(r < 0 for r in stores) or self.privacy_leakage < 0:
            raise DomainError("rate tuples must be componentwise nonnegative")
        object.__setattr__(self, "key_rates", keys)
        object.__setattr__(self, "storage_rates", stores)
        object.__setattr__(self, "privacy_leakage", float(self.privacy_leakage))


@dataclass(frozen=True)
class InfoRecord:
    """Per-entity information quantities of a fixed system + auxiliary channels.

    All values in bits. ``h_pair[j][k]`` is H(U_j, U_k); ``i_u_rest[j]`` is
    I(U_j; U_rest) and ``h_u_given_rest[j]`` is H(U_j | U_rest), both with
    respect to all other entities. ``product_two_enrollment`` marks records
    whose two entities share one separate-measurement transition matrix.
    """

    entity_count: int
    h_u: tuple
    i_uy: tuple
    i_ux: tuple
    i_uxt: tuple
    i_u_rest: tuple
    h_u_given_rest: tuple
    h_pair: tuple
    h_u_all: float
    product_two_enrollment: bool = False

    def h_u_given_y(self, j: int) -> float:
        return self.h_u[j] - self.i_uy[j]

    def h_u_given_xt(self, j: int) -> float:
        return self.h_u[j] - self.i_uxt[j]

    def pair_entropy(self, j: int, k: int) -> float:
        return self.h_pair[j][k]


def _u(j: int) -> str:
    return f"U{j + 1}"


def info_joint(sys: EntitySystem, aux: Sequence[AuxiliaryChannel]) -> JointPmf:
    """Full joint over (U_1..U_J, X~_1..X~_J, X, Y_1..Y_J)."""
    J = sys.entity_count
    if len(aux) != J:
        raise UsageError(f"need one auxiliary channel per entity ({J}), got {len(aux)}")
    for j, (bc, a) in enumerate(zip(sys.entities, aux)):
        if a.cond.input_size != bc.enc_size:
            raise UsageError(f"aux channel {j} input alphabet does not match encoder alphabet")
    u_sizes = [a.cond.output_size for a in aux]
    xt_sizes = [bc.enc_size for bc in sys.entities]
    y_sizes = [bc.dec_size for bc in sys.entities]
    shape = tuple(u_sizes + xt_sizes + [sys.source.size] + y_sizes)
    ndim = len(shape)
    x_axis = 2 * J

    def view(arr, axes):
        # transpose so target axes are ascending, then reshape with singleton fill
        order = sorted(range(len(axes)), key=lambda k: axes[k])
        arr = np.transpose(arr, order)
        vshape = [1] * ndim
        for k, ax in enumerate(sorted(axes)):
            vshape[ax] = arr.shape[k]
        return arr.reshape(vshape)

    mass = np.ones(shape)
    mass *= view(sys.source.probs, [x_axis])
    for j, bc in enumerate(sys.entities):
        mass *= view(bc.table, [x_axis, J + j, x_axis + 1 + j])
    for j, a in enumerate(aux):
        mass *= view(a.cond.matrix, [J + j, j])
    names = (
        [_u(j) for j in range(J)]
        + [f"XT{j + 1}" for j in range(J)]
        + ["X"]
        + [f"Y{j + 1}" for j in range(J)]
    )
    return JointPmf(tuple(names), mass)


def _is_product_two_enrollment(sys: EntitySystem) -> bool:
    if sys.entity_count != 2:
        return False
    m0, m1 = sys.entities[0].measure, sys.entities[1].measure
    if m0 is None or m1 is None:
        return False
    return m0.matrix.shape == m1.matrix.shape and np.allclose(
        m0.matrix, m1.matrix, atol=1e-12, rtol=0.0
    )


def info_record(sys: EntitySystem, aux: Sequence[AuxiliaryChannel]) -> InfoRecord:
    """Assemble the joint law and compute every field by exact marginalization."""
    joint = info_joint(sys, aux)
    J = sys.entity_count
    all_u = [_u(j) for j in range(J)]
    h_u, i_uy, i_ux, i_uxt, i_u_rest, h_rest = [], [], [], [], [], []
    for j in range(J):
        rest = [u for k, u in enumerate(all_u) if k != j]
        h_u.append(joint.entropy_of([_u(j)]))
        i_uy.append(mutual_information(joint, [_u(j)], [f"Y{j + 1}"]))
        i_ux.append(mutual_information(joint, [_u(j)], ["X"]))
        i_uxt.append(mutual_information(joint, [_u(j)], [f"XT{j + 1}"]))
        if rest:
            i_u_rest.append(mutual_information(joint, [_u(j)], rest))
            h_rest.append(conditional_entropy(joint, [_u(j)], rest))
        else:
            i_u_rest.append(0.0)
            h_rest.append(h_u[j])
    pair = [[0.0] * J for _ in range(J)]
    for j in range(J):
        pair[j][j] = h_u[j]
        for k in range(j + 1, J):
            h_jk = joint.entropy_of([_u(j), _u(k)])
            pair[j][k] = pair[k][j] = h_jk
    return InfoRecord(
        entity_count=J,
        h_u=tuple(h_u),
        i_uy=tuple(i_uy),
        i_ux=tuple(i_ux),
        i_uxt=tuple(i_uxt),
        i_u_rest=tuple(i_u_rest),
        h_u_given_rest=tuple(h_rest),
        h_pair=tuple(tuple(row) for row in pair),
        h_u_all=joint.entropy_of(all_u),
        product_two_enrollment=_is_product_two_enrollment(sys),
    )


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of testing one rate tuple against one constraint family.

    ``slacks`` maps constraint labels to signed slack in bits (nonnegative
    means satisfied); the binding set collects constraints met with equality
    up to the tolerance.
    """

    member: bool
    slacks: dict
    binding: tuple
    tol: float

    def to_dict(self) -> dict:
        return {
            "member": self.member,
            "tol": self.tol,
            "slacks": dict(self.slacks),
            "binding": list(self.binding),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _finish(constraints, tol: float) -> MembershipReport:
    slacks = {}
    for label, sense, lhs, rhs in constraints:
        slack = rhs - lhs if sense == "le" else lhs - rhs
        slacks[label] = slack
    member = all(s >= -tol for s in slacks.values())
    binding = tuple(label for label, s in slacks.items() if abs(s) <= tol)
    return MembershipReport(member=member, slacks=slacks, binding=binding, tol=tol)


def _check_counts(rec: InfoRecord, t: RateTuple):
    if len(t.key_rates) != rec.entity_count or len(t.storage_rates) != rec.entity_count:
        raise UsageError(
            f"rate tuple has {len(t.key_rates)} keys / {len(t.storage_rates)} storages "
            f"for {rec.entity_count} entities"
        )


def eval_multi_entity_inner(
    rec: InfoRecord, t: RateTuple, model: str = "gs", tol: float = 1e-9
) -> MembershipReport:
    """Multi-entity achievable region membership (GS or CS model).

    Key rates pay the mutual-independence penalty I(U_j; U_rest); the
    privacy-leakage floor clamps each entity's excess I(U_j;X) - I(U_j;Y_j)
    at zero before summing.
    """
    _check_counts(rec, t)
    model = _check_model(model)
    cons = []
    for j in range(rec.entity_count):
        cons.append(
            (f"thm1:key:j={j + 1}", "le", t.key_rates[j], rec.i_uy[j] - rec.i_u_rest[j])
        )
    leak_floor = sum(max(0.0, rec.i_ux[j] - rec.i_uy[j]) for j in range(rec.entity_count))
    cons.append(("thm1:leak", "ge", t.privacy_leakage, leak_floor))
    for j in range(rec.entity_count):
        if model == "gs":
            cons.append(
                (f"thm1:storage:j={j + 1}", "ge", t.storage_rates[j], rec.i_uxt[j] - rec.i_uy[j])
            )
            cons.append(
                (
                    f"thm1:keystore:j={j + 1}",
                    "le",
                    t.key_rates[j] + t.storage_rates[j],
                    rec.h_u_given_rest[j],
                )
            )
        else:
            cons.append(
                (
                    f"thm1:storage:j={j + 1}",
                    "ge",
                    t.storage_rates[j],
                    rec.i_uxt[j] - rec.i_u_rest[j],
                )
            )
            cons.append(
                (f"thm1:storecap:j={j + 1}", "le", t.storage_rates[j], rec.h_u_given_rest[j])
            )
    return _finish(cons, tol)


def eval_pd_ln_outer(
    rec: InfoRecord,
    t: RateTuple,
    model: str = "gs",
    classes: Optional[Sequence[ChannelClass]] = None,
    tol: float = 1e-9,
) -> MembershipReport:
    """Outer-bound membership for degraded / less-noisy systems.

    The caller must classify the channels first; every entity has to be
    physically degraded or carry a less-noisy strong-privacy certificate.
    """
    _check_counts(rec, t)
    model = _check_model(model)
    if classes is None or len(classes) != rec.entity_count:
        raise UsageError("eval_pd_ln_outer requires one ChannelClass per entity")
    for j, c in enumerate(classes):
        if c.kind == "neither":
            raise UsageError(f"entity {j} is neither degraded nor less-noisy; outer bound void")
    cons = []
    for j in range(rec.entity_count):
        cons.append((f"lem1:key:j={j + 1}", "le", t.key_rates[j], rec.i_uy[j]))
    cons.append(("lem1:leak", "ge", t.privacy_leakage, 0.0))
    for j in range(rec.entity_count):
        if model == "gs":
            floor = rec.i_uxt[j] - rec.i_uy[j]
        else:
            floor = rec.i_uxt[j]
        cons.append((f"lem1:storage:j={j + 1}", "ge", t.storage_rates[j], floor))
    return _finish(cons, tol)


def eval_two_enrollment(
    rec: InfoRecord, t: RateTuple, model: str = "gs", bound: str = "inner", tol: float = 1e-9
) -> MembershipReport:
    """Two-enrollment region membership (GS or CS; inner or outer bound).

    The inner bound demands a record built from the product construction
    (separate measurements, one transition matrix for both entities); the
    outer bound accepts any caller-supplied coupling of (U_1, U_2).
    """
    if rec.entity_count != 2:
        raise UsageError("two-enrollment bounds are defined for exactly 2 entities")
    _check_counts(rec, t)
    model = _check_model(model)
    if bound not in ("inner", "outer"):
        raise UsageError(f"bound must be 'inner' or 'outer', got {bound!r}")
    if bound == "inner" and not rec.product_two_enrollment:
        raise UsageError(
            "inner bound requires the separate same-matrix construction; "
            "build the record from such a system or evaluate the outer bound"
        )
    cons = []
    for j in range(2):
        cons.append((f"thm2:key:j={j + 1}", "le", t.key_rates[j], rec.i_uy[j]))
    leak_lb = sum(rec.i_ux[j] - rec.i_uy[j] for j in range(2))
    leak_ub = sum(rec.i_ux[j] - rec.i_uxt[j] + t.storage_rates[j] for j in range(2))
    cons.append(("thm2:leak:lb", "ge", t.privacy_leakage, leak_lb))
    cons.append(("thm2:leak:ub", "le", t.privacy_leakage, leak_ub))
    h12 = rec.pair_entropy(0, 1)
    for j in range(2):
        k = 1 - j
        if model == "gs":
            cons.append(
                (f"thm2:storage:j={j + 1}", "ge", t.storage_rates[j], rec.i_uxt[j] - rec.i_uy[j])
            )
            cons.append(
                (
                    f"thm2:keystore:j={j + 1}",
                    "le",
                    t.key_rates[j] + t.storage_rates[j],
                    rec.h_u[j],
                )
            )
            cons.append(
                (
                    f"thm2:sumrate:j={j + 1}",
                    "le",
                    t.key_rates[j] + t.storage_rates[j] + t.storage_rates[k],
                    h12,
                )
            )
        else:
            cons.append((f"thm2:storage:j={j + 1}", "ge", t.storage_rates[j], rec.i_uxt[j]))
            cons.append((f"thm2:storecap:j={j + 1}", "le", t.storage_rates[j], rec.h_u[j]))
            cons.append(
                (
                    f"thm2:storepair:j={j + 1}",
                    "le",
                    t.storage_rates[j] + t.storage_rates[k],
                    h12 + t.key_rates[k],
                )
            )
    return _finish(cons, tol)


def _check_model(model: str) -> str:
    model = model.lower()
    if model not in ("gs", "cs"):
        raise UsageError(f"model must be 'gs' or 'cs', got {model!r}")
    return model


def gs_corner_point(rec: InfoRecord, setting: str = "two_enrollment") -> RateTuple:
    """Canonical generated-secret corner: keys maxed, storage and leakage floored.

    Asymptotic slack terms are dropped; negative key allowances collapse
    to zero (keys are nonnegative by definition).
    """
    J = rec.entity_count
    if setting == "multi_entity":
        keys = tuple(max(0.0, rec.i_uy[j] - rec.i_u_rest[j]) for j in range(J))
        leak = sum(max(0.0, rec.i_ux[j] - rec.i_uy[j]) for j in range(J))
    elif setting == "two_enrollment":
        if J != 2:
            raise UsageError("two_enrollment corner needs exactly 2 entities")
        keys = tuple(max(0.0, rec.i_uy[j]) for j in range(J))
        leak = max(0.0, sum(rec.i_ux[j] - rec.i_uy[j] for j in range(J)))
    else:
        raise UsageError(f"setting must be 'multi_entity' or 'two_enrollment', got {setting!r}")
    stores = tuple(max(0.0, rec.i_uxt[j] - rec.i_uy[j]) for j in range(J))
    return RateTuple(keys, leak, stores)

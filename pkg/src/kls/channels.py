"""Broadcast measurement channels: construction, composition, classification.

A broadcast channel couples the encoder measurement X~ and the decoder
measurement Y of the same hidden source symbol X through a joint conditional
law P(x~, y | x). Classification distinguishes physically degraded channels
(X~ - Y - X Markov) from less-noisy channels certified on a grid of auxiliary
test channels, the two families for which public helper data leak nothing
about the hidden source.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DistributionError, DomainError, ResourceLimitError, UsageError
from .probkit import ConditionalPmf, JointPmf, Pmf, q_function

LN_GRID_CAP = 200_000

__all__ = [
    "BroadcastChannel",
    "EntitySystem",
    "ChannelClass",
    "bsc",
    "bsc_star",
    "cascade",
    "separate_bc",
    "degraded_bc",
    "entity_joint",
    "is_physically_degraded",
    "certify_less_noisy_strong_privacy",
    "classify",
    "awgn_to_bsc",
    "load_system",
    "system_from_dict",
]


@dataclass(frozen=True)
class BroadcastChannel:
    """P(x~, y | x) stored as a dense table of shape (|X|, |X~|, |Y|).

    ``measure`` records the common single-output measurement channel when the
    table was built as a product of two independent copies of it (the
    separate-measurements model); None otherwise.
    """

    table: np.ndarray
    measure: Optional[ConditionalPmf] = None

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=float)
        if arr.ndim != 3:
            raise DistributionError("broadcast channel table must be 3-D (x, x~, y)")
        if np.any(arr < 0.0):
            raise DistributionError("negative broadcast channel mass")
        sums = arr.reshape(arr.shape[0], -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-12):
            raise DistributionError("each conditional joint P(.,.|x) must sum to 1 within 1e-12")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)

    @property
    def input_size(self) -> int:
        return self.table.shape[0]

    @property
    def enc_size(self) -> int:
        return self.table.shape[1]

    @property
    def dec_size(self) -> int:
        return self.table.shape[2]

    def enc_marginal(self) -> ConditionalPmf:
        """P(x~ | x)."""
        return ConditionalPmf(self.table.sum(axis=2))

    def dec_marginal(self) -> ConditionalPmf:
        """P(y | x)."""
        return ConditionalPmf(self.table.sum(axis=1))


@dataclass(frozen=True)
class EntitySystem:
    """Hidden source plus one broadcast channel per entity."""

    source: Pmf
    entities: tuple

    def __post_init__(self):
        entities = tuple(self.entities)
        if not entities:
            raise UsageError("an entity system needs at least one entity")
        for bc in entities:
            if bc.input_size != self.source.size:
                raise UsageError("all entity channels must share the source alphabet")
        object.__setattr__(self, "entities", entities)

    @property
    def entity_count(self) -> int:
        return len(self.entities)


@dataclass(frozen=True)
class ChannelClass:
    """Classification certificate for one entity's broadcast channel.

    ``kind`` is one of "physically_degraded", "less_noisy_strong_privacy" or
    "neither". For "neither" reached through the less-noisy test, ``witness``
    holds an auxiliary channel P(u | x~) with I(U;X) > I(U;Y). The less-noisy
    certificate is grid-resolution-limited, never exact.
    """

    kind: str
    witness: Optional[ConditionalPmf]
    tol: float
    grid_resolution: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("physically_degraded", "less_noisy_strong_privacy", "neither"):
            raise UsageError(f"unknown channel class kind {self.kind!r}")
        if (self.witness is not None) != (self.kind == "neither"):
            raise UsageError("a witness is present iff kind == 'neither'")


def bsc(p: float) -> ConditionalPmf:
    """Binary symmetric channel with crossover probability p."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"bsc crossover must lie in [0,1], got {p!r}")
    return ConditionalPmf(np.array([[1.0 - p, p], [p, 1.0 - p]]))


def bsc_star(a: float, b: float) -> float:
    """Crossover probability of two cascaded BSCs: a*b = a(1-b) + b(1-a)."""
    return a * (1.0 - b) + b * (1.0 - a)


def cascade(c1: ConditionalPmf, c2: ConditionalPmf) -> ConditionalPmf:
    """Compose two channels: output of c1 feeds c2 (matrix product)."""
    if c1.output_size != c2.input_size:
        raise UsageError(
            f"cascade alphabet mismatch: {c1.output_size} outputs vs {c2.input_size} inputs"
        )
    return ConditionalPmf(c1.matrix @ c2.matrix)


def separate_bc(measure: ConditionalPmf) -> BroadcastChannel:
    """Broadcast channel with conditionally independent encoder/decoder outputs.

    Both measurements pass through the same single-output channel:
    P(x~, y | x) = measure(x~|x) * measure(y|x).
    """
    m = measure.matrix
    table = m[:, :, None] * m[:, None, :]
    return BroadcastChannel(table, measure=measure)


def degraded_bc(decoder: ConditionalPmf, enc_from_dec: ConditionalPmf) -> BroadcastChannel:
    """Physically degraded broadcast channel: X -> Y -> X~.

    Y is drawn from ``decoder`` and the encoder observation X~ is a further
    degradation of Y through ``enc_from_dec``, so X~ - Y - X holds by
    construction.
    """
    if decoder.output_size != enc_from_dec.input_size:
        raise UsageError("decoder output alphabet must feed the degrading stage")
    table = np.einsum("xy,ye->xey", decoder.matrix, enc_from_dec.matrix)
    return BroadcastChannel(table)


def entity_joint(sys: EntitySystem, j: int) -> JointPmf:
    """Joint law of (X~_j, Y_j, X) under the source and entity j's channel."""
    bc = _entity(sys, j)
    mass = np.einsum("x,xey->eyx", sys.source.probs, bc.table)
    return JointPmf(("Xt", "Y", "X"), mass)


def _entity(sys: EntitySystem, j: int) -> BroadcastChannel:
    if not 0 <= j < sys.entity_count:
        raise UsageError(f"entity index {j} out of range for {sys.entity_count} entities")
    return sys.entities[j]


def is_physically_degraded(sys: EntitySystem, j: int, tol: float = 1e-9) -> bool:
    """True iff X~_j and X are conditionally independent given Y_j.

    Conditioning events with P(y) <= tol are skipped to avoid dividing by
    vanishing marginals.
    """
    bc = _entity(sys, j)
    joint = np.einsum("x,xey->eyx", sys.source.probs, bc.table)  # (x~, y, x)
    p_y = joint.sum(axis=(0, 2))
    for y in range(bc.dec_size):
        if p_y[y] <= tol:
            continue
        slice_xy = joint[:, y, :] / p_y[y]  # P(x~, x | y)
        residual = slice_xy - np.outer(slice_xy.sum(axis=1), slice_xy.sum(axis=0))
        if np.max(np.abs(residual)) > tol:
            return False
    return True


def _simplex_lattice(resolution: int, k: int):
    """All length-k probability vectors with entries that are multiples of 1/resolution."""
    for cuts in itertools.combinations(range(resolution + k - 1), k - 1):
        counts = []
        prev = -1
        for c in cuts:
            counts.append(c - prev - 1)
            prev = c
        counts.append(resolution + k - 2 - prev)
        yield np.array(counts, dtype=float) / resolution


def _ln_gap(sys: EntitySystem, j: int, aux_matrix: np.ndarray) -> float:
    """I(U;Y_j) - I(U;X) for the auxiliary channel P(u|x~) given as a matrix."""
    bc = _entity(sys, j)
    joint = np.einsum("x,xey->eyx", sys.source.probs, bc.table)
    p_uy = np.einsum("eyx,eu->uy", joint, aux_matrix)
    p_ux = np.einsum("eyx,eu->ux", joint, aux_matrix)
    from .probkit import _entropy_bits

    h_u = _entropy_bits(p_uy.sum(axis=1))
    i_uy = h_u + _entropy_bits(p_uy.sum(axis=0)) - _entropy_bits(p_uy)
    i_ux = h_u + _entropy_bits(p_ux.sum(axis=0)) - _entropy_bits(p_ux)
    return i_uy - i_ux


def _refine_worst(sys, j, start: np.ndarray, step0: float = 0.1, step_min: float = 1e-7):
    """Deterministic compass search decreasing the less-noisy gap from a grid point."""
    best = start.copy()
    best_val = _ln_gap(sys, j, best)
    n_in, n_u = best.shape
    step = step0
    while step > step_min:
        improved = False
        for r in range(n_in):
            for a in range(n_u):
                if best[r, a] <= 0.0:
                    continue
                for b in range(n_u):
                    if a == b:
                        continue
                    cand = best.copy()
                    delta = min(step, cand[r, a])
                    cand[r, a] -= delta
                    cand[r, b] += delta
                    val = _ln_gap(sys, j, cand)
                    if val < best_val - 1e-15:
                        best, best_val = cand, val
                        improved = True
        if not improved:
            step *= 0.5
    return best, best_val


def certify_less_noisy_strong_privacy(
    sys: EntitySystem,
    j: int,
    grid_resolution: int = 8,
    aux_cardinality: Optional[int] = None,
    tol: float = 1e-9,
) -> ChannelClass:
    """Grid certificate that I(U;Y_j) >= I(U;X) for all test channels P(u|x~).

    Scans a deterministic simplex lattice of auxiliary channels with |U| =
    ``aux_cardinality`` (default |X~|+1), then locally refines around the
    worst grid point. The result is explicitly resolution-limited: a
    "less_noisy_strong_privacy" verdict certifies the gap on the grid only,
    while a "neither" verdict carries an exact violating witness.
    """
    bc = _entity(sys, j)
    n_in = bc.enc_size
    if aux_cardinality is None:
        aux_cardinality = n_in + 1
    if aux_cardinality < 2:
        raise UsageError("aux_cardinality must be at least 2")
    per_row = math.comb(grid_resolution + aux_cardinality - 1, aux_cardinality - 1)
    if per_row**n_in > LN_GRID_CAP:
        raise ResourceLimitError(
            f"LN grid would have {per_row**n_in} points, cap is {LN_GRID_CAP}"
        )
    rows = list(_simplex_lattice(grid_resolution, aux_cardinality))
    worst_val = math.inf
    worst = None
    for combo in itertools.product(rows, repeat=n_in):
        aux = np.vstack(combo)
        val = _ln_gap(sys, j, aux)
        if val < worst_val:
            worst_val, worst = val, aux
    worst, worst_val = _refine_worst(sys, j, worst)
    if worst_val >= -tol:
        return ChannelClass("less_noisy_strong_privacy", None, tol, grid_resolution)
    return ChannelClass("neither", ConditionalPmf(worst), tol, grid_resolution)


def classify(
    sys: EntitySystem,
    j: int,
    tol: float = 1e-9,
    grid_resolution: int = 8,
    aux_cardinality: Optional[int] = None,
) -> ChannelClass:
    """Classify entity j: physically degraded, less-noisy strong privacy, or neither."""
    if is_physically_degraded(sys, j, tol):
        return ChannelClass("physically_degraded", None, tol, None)
    return certify_less_noisy_strong_privacy(sys, j, grid_resolution, aux_cardinality, tol)


def awgn_to_bsc(snr_db: float) -> float:
    """Hard-decision crossover probability of antipodal signaling over AWGN.

    Matched-filter reception at the given SNR yields bit error probability
    Q(sqrt(SNR)) with SNR on the linear scale.
    """
    return q_function(math.sqrt(10.0 ** (snr_db / 10.0)))


def system_from_dict(data: dict) -> EntitySystem:
    """Build an EntitySystem from the channel-definition JSON structure."""
    try:
        source = Pmf(np.asarray(data["source"], dtype=float))
        raw_entities = data["entities"]
    except KeyError as exc:
        raise UsageError(f"channel definition missing key {exc}") from exc
    if not isinstance(raw_entities, list) or not raw_entities:
        raise UsageError("channel definition needs a non-empty 'entities' list")
    entities = []
    for spec in raw_entities:
        kind = spec.get("type")
        if kind == "separate_bsc":
            entities.append(separate_bc(bsc(float(spec["p"]))))
        elif kind == "awgn":
            entities.append(separate_bc(bsc(awgn_to_bsc(float(spec["snr_db"])))))
        elif kind == "explicit":
            entities.append(BroadcastChannel(np.asarray(spec["table"], dtype=float)))
        else:
            raise UsageError(f"unknown entity type {kind!r}")
    return EntitySystem(source, tuple(entities))


def load_system(path: str) -> EntitySystem:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return system_from_dict(data)

"""Exhaustive small-blocklength random-binning oracle.

Measures the operational quantities of the key-agreement definitions exactly
at desk-scale blocklengths: each trial draws uniform random bin maps
u^n -> (key, helper, code) over the identity auxiliary (U^n = X~^n), decodes
by maximum posterior probability inside the received (helper, code) bin, and
evaluates error probability, key entropy, secrecy leakage, helper cross
information and privacy leakage from the fully enumerated joint. The only
randomness is the bin draw; every reported number is exact for its draw.

Asymptotic rate-region boundaries are out of reach at these blocklengths;
the oracle supports exact identities and direction-of-trend checks only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .channels import EntitySystem
from .errors import ResourceLimitError, UsageError
from .probkit import ZERO_MASS

ENUM_CAP = 2**24
DEFAULT_N_CAP = 10
TRIALS_CAP = 64

__all__ = [
    "BinningConfig",
    "write_trend_csv",
    "TrialStats",
    "OracleReport",
    "OneTimePadReport",
    "TrendReport",
    "bin_counts",
    "run_binning",
    "one_time_pad_check",
    "trend_check",
]


def bin_counts(n: int, rates: Tuple[float, float, float]) -> Tuple[int, int, int]:
    """Integer index-space sizes for one entity's (key, helper, code) rates.

    The key space rounds up so a declared positive key rate is always
    realized; helper and code spaces round down (their rates are budgets).
    """
    rs, rw, rc = rates
    ms = max(1, math.ceil(2.0 ** (n * rs) - 1e-9))
    mw = max(1, math.floor(2.0 ** (n * rw) + 1e-9))
    mc = max(1, math.floor(2.0 ** (n * rc) + 1e-9))
    return ms, mw, mc


@dataclass(frozen=True)
class BinningConfig:
    """One oracle run request: blocklength, per-entity rate triples, bin draws."""

    n: int
    rates: tuple  # one (rs, rw, rc) triple per entity
    seed: int = 0
    trials: int = 1
    identity_aux: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise UsageError("blocklength n must be >= 1")
        if self.trials < 1 or self.trials > TRIALS_CAP:
            raise UsageError(f"trials must lie in [1, {TRIALS_CAP}]")
        if not self.identity_aux:
            raise UsageError(
                "only the identity auxiliary (U^n = X~^n) is supported; general "
                "stochastic auxiliary generation is out of scope"
            )
        rates = tuple(tuple(float(r) for r in triple) for triple in self.rates)
        if not rates:
            raise UsageError("need at least one entity rate triple")
        for triple in rates:
            if len(triple) != 3 or any(r < 0 for r in triple):
                raise UsageError("each entity needs a nonnegative (rs, rw, rc) triple")
        object.__setattr__(self, "rates", rates)

    def index_space_realizable(self, enc_alphabet: int) -> bool:
        """Whether every entity's index space fits inside |X~|^n (diagnostic only)."""
        cap = enc_alphabet**self.n
        return all(math.prod(bin_counts(self.n, triple)) <= cap for triple in self.rates)


@dataclass(frozen=True)
class TrialStats:
    mean: float
    lo: float
    hi: float
    per_trial: tuple = ()

    @staticmethod
    def of(values: Sequence[float]) -> "TrialStats":
        vals = [float(v) for v in values]
        return TrialStats(sum(vals) / len(vals), min(vals), max(vals), tuple(vals))

    def to_dict(self) -> dict:
        return {"mean": self.mean, "min": self.lo, "max": self.hi}


@dataclass(frozen=True)
class OracleReport:
    """Exact operational quantities, averaged over bin draws with min/max."""

    n: int
    trials: int
    seed: int
    bin_sizes: tuple  # per entity (Ms, Mw, Mc)
    error_prob: TrialStats
    key_entropy_rate: tuple  # per entity TrialStats, H(S)/n
    secrecy_leakage: tuple  # per entity TrialStats, I(S; W, C) unnormalized
    privacy_leakage_rate: TrialStats  # I(X^n; all helpers)/n
    helper_mi: Optional[TrialStats]  # I(W_1; W_2), two-enrollment mode

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "bin_sizes": [list(b) for b in self.bin_sizes],
            "error_prob": self.error_prob.to_dict(),
            "key_entropy_rate": [s.to_dict() for s in self.key_entropy_rate],
            "secrecy_leakage": [s.to_dict() for s in self.secrecy_leakage],
            "privacy_leakage_rate": self.privacy_leakage_rate.to_dict(),
            "helper_mi": self.helper_mi.to_dict() if self.helper_mi else None,
        }


def _kron_power(mat: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.kron, [mat] * n)


def _entropy(arr: np.ndarray) -> float:
    flat = np.asarray(arr, dtype=float).ravel()
    support = flat[flat > ZERO_MASS]
    if support.size == 0:
        return 0.0
    return max(0.0, float(-(support * np.log2(support)).sum()))


def _decode_table(m1: np.ndarray, gid: np.ndarray, n_groups: int) -> np.ndarray:
    """decode[g, y] = lexicographically-first MAP sequence in bin g given y."""
    K, Ky = m1.shape
    decode = np.zeros((n_groups, Ky), dtype=np.int64)
    for g in range(n_groups):
        members = np.nonzero(gid == g)[0]
        if members.size == 0:
            continue  # never queried: the true sequence always lies in its own bin
        block = m1[members, :]
        decode[g, :] = members[np.argmax(block, axis=0)]
    return decode


def _group_sum_columns(cond: np.ndarray, labels: np.ndarray, n_bins: int) -> np.ndarray:
    """Sum the columns of cond (L x K) by bin label: result (L x n_bins)."""
    out = np.zeros((cond.shape[0], n_bins))
    np.add.at(out.T, labels, cond.T)
    return out


class _EntityContext:
    """Per-entity precomputation shared by all trials."""

    def __init__(self, sys: EntitySystem, j: int, n: int, need_separable: bool):
        bc = sys.entities[j]
        src = sys.source.probs
        per_symbol_joint = np.einsum("x,xey->ey", src, bc.table)
        self.m1 = _kron_power(per_symbol_joint, n)  # (K, Ky): P(x~^n, y^n)
        self.p_u = _kron_power(per_symbol_joint.sum(axis=1), n)  # P(x~^n)
        self.K = self.m1.shape[0]
        self.cond_enc = _kron_power(bc.enc_marginal().matrix, n)  # (L, K): P(x~^n | x^n)
        if need_separable:
            if bc.measure is None:
                raise UsageError(
                    "multi-entity oracle runs need separate-measurement channels "
                    "(conditionally independent encoder/decoder observations)"
                )
            self.cond_dec = _kron_power(bc.measure.matrix, n)
        else:
            self.cond_dec = None


def run_binning(sys: EntitySystem, cfg: BinningConfig) -> OracleReport:
    """Run the exhaustive binning oracle; deterministic for fixed (sys, cfg)."""
    J = sys.entity_count
    if len(cfg.rates) != J:
        raise UsageError(f"{len(cfg.rates)} rate triples for {J} entities")
    n = cfg.n
    if n > DEFAULT_N_CAP:
        raise ResourceLimitError(f"blocklength {n} exceeds the oracle cap {DEFAULT_N_CAP}")
    sizes = [bin_counts(n, triple) for triple in cfg.rates]
    ctxs = [_EntityContext(sys, j, n, need_separable=J > 1) for j in range(J)]
    for ctx in ctxs:
        if ctx.m1.size > ENUM_CAP:
            raise ResourceLimitError(
                f"enumeration space {ctx.m1.size} exceeds cap {ENUM_CAP}"
            )
        if ctx.cond_enc.size > ENUM_CAP:
            raise ResourceLimitError("source-conditional table exceeds enumeration cap")
    p_xn = _kron_power(sys.source.probs, n)

    err_trials: List[float] = []
    key_trials: List[List[float]] = [[] for _ in range(J)]
    sec_trials: List[List[float]] = [[] for _ in range(J)]
    priv_trials: List[float] = []
    helper_trials: List[float] = []

    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        maps = []
        for j in range(J):
            ms, mw, mc = sizes[j]
            K = ctxs[j].K
            s_map = rng.integers(0, ms, size=K)
            w_map = rng.integers(0, mw, size=K)
            c_map = rng.integers(0, mc, size=K)
            maps.append((s_map, w_map, c_map))
        _accumulate_trial(
            sys, cfg, sizes, ctxs, p_xn, maps,
            err_trials, key_trials, sec_trials, priv_trials, helper_trials,
        )

    return OracleReport(
        n=n,
        trials=cfg.trials,
        seed=cfg.seed,
        bin_sizes=tuple(sizes),
        error_prob=TrialStats.of(err_trials),
        key_entropy_rate=tuple(TrialStats.of(v) for v in key_trials),
        secrecy_leakage=tuple(TrialStats.of(v) for v in sec_trials),
        privacy_leakage_rate=TrialStats.of(priv_trials),
        helper_mi=TrialStats.of(helper_trials) if helper_trials else None,
    )


def _accumulate_trial(
    sys, cfg, sizes, ctxs, p_xn, maps,
    err_trials, key_trials, sec_trials, priv_trials, helper_trials,
):
    J = sys.entity_count
    n = cfg.n
    correct_given_x = []
    w_given_x = []
    err_single = None
    for j in range(J):
        ms, mw, mc = sizes[j]
        s_map, w_map, c_map = maps[j]
        ctx = ctxs[j]
        gid = w_map * mc + c_map
        decode = _decode_table(ctx.m1, gid, mw * mc)
        decoded_key = s_map[decode[gid, :]]  # (K, Ky): decoded key for true u, received y
        wrong = decoded_key != s_map[:, None]
        if J == 1:
            err_single = float((ctx.m1 * wrong).sum())
        else:
            correct = (~wrong).astype(float)
            tmp = ctx.cond_enc @ correct  # (L, Ky)
            correct_given_x.append((tmp * ctx.cond_dec).sum(axis=1))

        p_s = np.bincount(s_map, weights=ctx.p_u, minlength=ms)
        key_trials[j].append(_entropy(p_s) / n)

        flat = (s_map * mw + w_map) * mc + c_map
        p_swc = np.bincount(flat, weights=ctx.p_u, minlength=ms * mw * mc)
        p_wc = np.bincount(w_map * mc + c_map, weights=ctx.p_u, minlength=mw * mc)
        sec_trials[j].append(
            max(0.0, _entropy(p_s) + _entropy(p_wc) - _entropy(p_swc))
        )

        w_given_x.append(_group_sum_columns(ctx.cond_enc, w_map, mw))

    if J == 1:
        err_trials.append(err_single)
    else:
        joint_correct = np.prod(np.vstack(correct_given_x), axis=0)
        err_trials.append(max(0.0, 1.0 - float(p_xn @ joint_correct)))

    # privacy: helpers of different entities are independent given x^n
    h_w_given_x = sum(
        float(p_xn @ np.apply_along_axis(_entropy, 1, g)) for g in w_given_x
    )
    if J == 1:
        p_w = p_xn @ w_given_x[0]
        h_w = _entropy(p_w)
    elif J == 2:
        p_w12 = np.einsum("x,xa,xb->ab", p_xn, w_given_x[0], w_given_x[1])
        h_w = _entropy(p_w12)
        p_w1 = p_w12.sum(axis=1)
        p_w2 = p_w12.sum(axis=0)
        helper_trials.append(
            max(0.0, _entropy(p_w1) + _entropy(p_w2) - h_w)
        )
    else:
        raise ResourceLimitError("joint helper statistics supported for at most 2 entities")
    priv_trials.append(max(0.0, h_w - h_w_given_x) / n)


@dataclass(frozen=True)
class OneTimePadReport:
    """Exact chosen-secret (one-time-pad) check on a product grid binning."""

    n: int
    bin_sizes: tuple
    error_prob_generated: float
    error_prob_chosen: float
    pad_secrecy_bits: float  # I(S; padded key, helper, code) for the chosen key
    generated_secrecy_bits: float  # I(S'; W', C') for contrast

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "bin_sizes": list(self.bin_sizes),
            "error_prob_generated": self.error_prob_generated,
            "error_prob_chosen": self.error_prob_chosen,
            "pad_secrecy_bits": self.pad_secrecy_bits,
            "generated_secrecy_bits": self.generated_secrecy_bits,
        }


def one_time_pad_check(
    sys: EntitySystem, n: int, rates: Tuple[float, float, float], entity: int = 0
) -> OneTimePadReport:
    """Chosen-secret embedding check with an even product (grid) binning.

    The grid binning splits the sequence index into exact (key, helper, code)
    digits, so the generated key is exactly uniform and independent of the
    helper/code pair; one-time padding a uniform chosen key then leaks
    nothing about it, and the chosen-secret decoder errs exactly when the
    generated-secret decoder errs.

    Requires a uniform measurement marginal (e.g. uniform source through
    symmetric channels) and an index space that exactly tiles |X~|^n.
    """
    if not 0 <= entity < sys.entity_count:
        raise UsageError("entity index out of range")
    ms, mw, mc = bin_counts(n, rates)
    ctx = _EntityContext(sys, entity, n, need_separable=False)
    K = ctx.K
    if ms * mw * mc != K:
        raise UsageError(
            f"grid binning needs Ms*Mw*Mc == |X~|^n ({ms}*{mw}*{mc} != {K})"
        )
    if ctx.m1.size > ENUM_CAP:
        raise ResourceLimitError("enumeration space exceeds cap")
    if np.max(np.abs(ctx.p_u - 1.0 / K)) > 1e-12:
        raise UsageError("grid one-time-pad check needs a uniform sequence marginal")
    u = np.arange(K)
    s_map = u % ms
    w_map = (u // ms) % mw
    c_map = u // (ms * mw)
    gid = w_map * mc + c_map
    decode = _decode_table(ctx.m1, gid, mw * mc)
    decoded_key = s_map[decode[gid, :]]
    wrong = decoded_key != s_map[:, None]
    err = float((ctx.m1 * wrong).sum())

    flat = (s_map * mw + w_map) * mc + c_map
    p_swc = np.bincount(flat, weights=ctx.p_u, minlength=ms * mw * mc).reshape(ms, mw, mc)
    p_s = p_swc.sum(axis=(1, 2))
    p_wc = p_swc.sum(axis=0)
    gen_secrecy = max(0.0, _entropy(p_s) + _entropy(p_wc) - _entropy(p_swc))

    # chosen key S uniform and independent; helper carries (S' + S) mod Ms
    joint = np.zeros((ms, ms, mw, mc))  # (chosen s, pad value, w', c')
    for s in range(ms):
        shifted = np.roll(p_swc, shift=s, axis=0)  # pad = s' + s mod ms
        joint[s] = shifted / ms
    p_pad_wc = joint.sum(axis=0)
    pad_secrecy = max(
        0.0, _entropy(p_pad_wc) + _entropy(np.full(ms, 1.0 / ms)) - _entropy(joint)
    )
    # the chosen-secret decoder errs iff the generated-secret decoder errs
    return OneTimePadReport(
        n=n,
        bin_sizes=(ms, mw, mc),
        error_prob_generated=err,
        error_prob_chosen=err,
        pad_secrecy_bits=pad_secrecy,
        generated_secrecy_bits=gen_secrecy,
    )


@dataclass(frozen=True)
class TrendReport:
    """Oracle measurements across blocklengths with a qualitative verdict."""

    n_list: tuple
    rates: tuple  # the single (rs, rw, rc) triple under test
    margins: tuple  # (helper, key, pair) slack of the code-eliminated system
    case: str  # "inside" | "outside"
    error_means: tuple
    leak_rate_means: tuple  # I(S;W,C)/n
    key_rate_means: tuple  # H(S)/n
    error_slopes: tuple
    leak_slopes: tuple
    error_noise: tuple
    leak_noise: tuple
    verdict: bool

    def rows(self) -> list:
        return [
            {
                "n": n,
                "error_prob": self.error_means[i],
                "leak_rate": self.leak_rate_means[i],
                "key_rate": self.key_rate_means[i],
            }
            for i, n in enumerate(self.n_list)
        ]


def write_trend_csv(report: "TrendReport", path: str) -> None:
    """Write the per-blocklength trend measurements as CSV."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "error_prob", "leak_rate", "key_rate"])
        for row in report.rows():
            writer.writerow(
                [row["n"], row["error_prob"], row["leak_rate"], row["key_rate"]]
            )


def _sem(values: Sequence[float]) -> float:
    vals = np.asarray(values, dtype=float)
    if vals.size <= 1:
        return 0.0
    return float(vals.std(ddof=1) / math.sqrt(vals.size))


def trend_check(
    sys: EntitySystem,
    rate_point: Tuple[float, float, float],
    n_list: Sequence[int],
    trials: int = 32,
    seed: int = 0,
    margin_gate: float = 0.05,
) -> TrendReport:
    """Direction-of-trend check for one entity at the identity auxiliary.

    The rate point must clear every constraint of the code-eliminated binning
    system by at least ``margin_gate`` bits (inside case) or violate one by
    at least that much (outside case). Inside: error probability and
    normalized secrecy leakage should be non-increasing in n within the
    trial-noise slack. Outside: the violation shows up as growing secrecy
    leakage, non-vanishing error, or a key-entropy shortfall.
    """
    if sys.entity_count != 1:
        raise UsageError("trend_check runs on single-entity systems")
    from .regions import AuxiliaryChannel, info_record

    rs, rw, rc = (float(r) for r in rate_point)
    rec = info_record(sys, [AuxiliaryChannel.identity(sys.entities[0].enc_size)])
    if rec.h_u_given_xt(0) > 1e-9 and rc > 0:
        raise UsageError("identity auxiliary forces a zero code rate")
    margins = (
        (rw + rc) - rec.h_u_given_y(0),
        rec.i_uy[0] - rs,
        rec.h_u[0] - (rs + rw + rc),
    )
    if all(m >= margin_gate for m in margins):
        case = "inside"
    elif min(margins) <= -margin_gate:
        case = "outside"
    else:
        raise UsageError(
            f"rate point is neither {margin_gate} inside nor outside: margins {margins}"
        )

    n_list = tuple(int(n) for n in n_list)
    reports = [
        run_binning(sys, BinningConfig(n=n, rates=((rs, rw, rc),), seed=seed, trials=trials))
        for n in n_list
    ]
    err_means = tuple(r.error_prob.mean for r in reports)
    leak_means = tuple(r.secrecy_leakage[0].mean / r.n for r in reports)
    key_means = tuple(r.key_entropy_rate[0].mean for r in reports)
    err_noise, leak_noise, err_slopes, leak_slopes = (), (), (), ()
    if len(n_list) > 1:
        err_noise = tuple(
            2.0 * (_sem(reports[i].error_prob.per_trial) + _sem(reports[i + 1].error_prob.per_trial))
            for i in range(len(n_list) - 1)
        )
        leak_noise = tuple(
            2.0
            * (
                _sem(reports[i].secrecy_leakage[0].per_trial) / n_list[i]
                + _sem(reports[i + 1].secrecy_leakage[0].per_trial) / n_list[i + 1]
            )
            for i in range(len(n_list) - 1)
        )
        err_slopes = tuple(
            err_means[i + 1] - err_means[i] for i in range(len(n_list) - 1)
        )
        leak_slopes = tuple(
            leak_means[i + 1] - leak_means[i] for i in range(len(n_list) - 1)
        )

    if case == "inside":
        ok_err = all(s <= noise + 1e-12 for s, noise in zip(err_slopes, err_noise))
        ok_leak = all(s <= noise + 1e-12 for s, noise in zip(leak_slopes, leak_noise))
        verdict = ok_err and ok_leak
    else:
        leak_grows = bool(leak_slopes) and leak_means[-1] > leak_means[0] + 1e-9
        leak_large = leak_means[-1] > 0.02
        err_floor = err_means[-1] > 0.05
        key_short = rs - key_means[-1] >= 0.05
        verdict = leak_grows or leak_large or err_floor or key_short
    return TrendReport(
        n_list=n_list,
        rates=(rs, rw, rc),
        margins=margins,
        case=case,
        error_means=err_means,
        leak_rate_means=leak_means,
        key_rate_means=key_means,
        error_slopes=err_slopes,
        leak_slopes=leak_slopes,
        error_noise=err_noise,
        leak_noise=leak_noise,
        verdict=verdict,
    )

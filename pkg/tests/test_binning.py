"""Exhaustive binning oracle: exact identities, determinism, trends."""

import json
import math

import numpy as np
import pytest

from kls.binning import (
    BinningConfig,
    bin_counts,
    one_time_pad_check,
    run_binning,
    trend_check,
)
from kls.channels import bsc, bsc_star, separate_bc, EntitySystem
from kls.errors import ResourceLimitError, UsageError
from kls.probkit import ConditionalPmf, Pmf


def hb(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p) if 0 < p < 1 else 0.0


@pytest.fixture(scope="module")
def sys06():
    return EntitySystem(Pmf.uniform(2), (separate_bc(bsc(0.06)),))


def test_bin_counts_rounding():
    assert bin_counts(1, (1.0, 1.0, 0.0)) == (2, 2, 1)
    # key index space rounds up, helper/code round down
    assert bin_counts(2, (0.3, 0.3, 0.0)) == (2, 1, 1)
    assert bin_counts(4, (0.5, 0.5, 0.5)) == (4, 4, 4)


def test_config_validation():
    with pytest.raises(UsageError):
        BinningConfig(n=0, rates=((0.5, 0.5, 0.0),))
    with pytest.raises(UsageError):
        BinningConfig(n=2, rates=((0.5, -0.1, 0.0),))
    with pytest.raises(UsageError):
        BinningConfig(n=2, rates=((0.5, 0.5, 0.0),), identity_aux=False)
    cfg = BinningConfig(n=2, rates=((0.4, 0.5, 0.0),))
    assert cfg.index_space_realizable(2)
    over = BinningConfig(n=2, rates=((1.0, 1.0, 0.0),))
    assert not over.index_space_realizable(2)


def test_caps(sys06):
    with pytest.raises(ResourceLimitError):
        run_binning(sys06, BinningConfig(n=30, rates=((0.5, 0.5, 0.0),)))
    with pytest.raises(UsageError):
        run_binning(sys06, BinningConfig(n=2, rates=((0.5, 0.5, 0.0),) * 2))


def test_n1_per_trial_values_match_brute_force(sys06):
    """n=1 exactness: each trial's report equals a direct 2x2 enumeration."""
    cfg = BinningConfig(n=1, rates=((1.0, 1.0, 0.0),), seed=5, trials=16)
    report = run_binning(sys06, cfg)
    d = bsc_star(0.06, 0.06)
    m1 = np.array([[0.5 * (1 - d), 0.5 * d], [0.5 * d, 0.5 * (1 - d)]])
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        s_map = rng.integers(0, 2, size=2)
        w_map = rng.integers(0, 2, size=2)
        c_map = rng.integers(0, 1, size=2)
        # brute-force decode and error for this draw
        err = 0.0
        for u in range(2):
            for y in range(2):
                candidates = [v for v in range(2) if w_map[v] == w_map[u]]
                best = max(candidates, key=lambda v: (m1[v, y], -v))
                if s_map[best] != s_map[u]:
                    err += m1[u, y]
        assert report.error_prob.per_trial[t] == pytest.approx(err, abs=1e-10)
        p_s = np.bincount(s_map, weights=[0.5, 0.5], minlength=2)
        h_s = -sum(p * math.log2(p) for p in p_s if p > 0)
        assert report.key_entropy_rate[0].per_trial[t] == pytest.approx(h_s, abs=1e-10)
        # per-trial error is either 0 (helper separates) or the MAP error of the cascade
        assert min(abs(err - 0.0), abs(err - d)) <= 1e-12


def test_noiseless_decoder_never_errs():
    sys_clean = EntitySystem(Pmf.uniform(2), (separate_bc(ConditionalPmf.identity(2)),))
    report = run_binning(
        sys_clean, BinningConfig(n=3, rates=((1.0, 1.0, 0.0),), seed=1, trials=8)
    )
    assert report.error_prob.mean == 0.0
    assert report.error_prob.hi == 0.0


def test_zero_key_rate_is_silent(sys06):
    report = run_binning(
        sys06, BinningConfig(n=3, rates=((0.0, 1.0, 0.0),), seed=2, trials=4)
    )
    assert report.key_entropy_rate[0].mean == 0.0
    assert report.secrecy_leakage[0].mean == 0.0


def test_seed_determinism(sys06):
    cfg = BinningConfig(n=4, rates=((0.3, 0.7, 0.0),), seed=9, trials=6)
    a = run_binning(sys06, cfg)
    b = run_binning(sys06, cfg)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)
    c = run_binning(sys06, BinningConfig(n=4, rates=((0.3, 0.7, 0.0),), seed=10, trials=6))
    assert json.dumps(a.to_dict(), sort_keys=True) != json.dumps(c.to_dict(), sort_keys=True)


def test_key_entropy_bounded_by_index_rate(sys06):
    cfg = BinningConfig(n=5, rates=((0.4, 0.7, 0.0),), seed=3, trials=8)
    report = run_binning(sys06, cfg)
    ms = report.bin_sizes[0][0]
    assert report.key_entropy_rate[0].hi <= math.log2(ms) / cfg.n + 1e-12
    assert 0.0 <= report.error_prob.lo <= report.error_prob.hi <= 1.0


def test_one_time_pad_exactness(sys06):
    # n=1: injective key binning, constant helper: MAP error of the cascade
    rep1 = one_time_pad_check(sys06, n=1, rates=(1.0, 0.0, 0.0))
    assert rep1.error_prob_generated == pytest.approx(bsc_star(0.06, 0.06), abs=1e-10)
    assert rep1.error_prob_chosen == rep1.error_prob_generated
    assert rep1.pad_secrecy_bits <= 1e-12
    assert rep1.generated_secrecy_bits <= 1e-12
    # n=2: key on one digit, helper on the other: same per-symbol MAP error
    rep2 = one_time_pad_check(sys06, n=2, rates=(0.5, 0.5, 0.0))
    assert rep2.error_prob_generated == pytest.approx(bsc_star(0.06, 0.06), abs=1e-10)
    assert rep2.pad_secrecy_bits <= 1e-12


def test_one_time_pad_preconditions(sys06):
    with pytest.raises(UsageError):
        one_time_pad_check(sys06, n=2, rates=(0.5, 0.0, 0.0))  # 2*1*1 != 4
    skewed = EntitySystem(Pmf(np.array([0.3, 0.7])), (separate_bc(bsc(0.06)),))
    with pytest.raises(UsageError):
        one_time_pad_check(skewed, n=1, rates=(1.0, 0.0, 0.0))


def test_two_enrollment_oracle_markov_bound():
    sys2 = EntitySystem(Pmf.uniform(2), (separate_bc(bsc(0.06)), separate_bc(bsc(0.06))))
    cfg = BinningConfig(n=3, rates=((0.3, 0.7, 0.0),) * 2, seed=4, trials=8)
    report = run_binning(sys2, cfg)
    assert report.helper_mi is not None
    # I(W1;W2) <= I(X^n; W1, W2) via the W1 - X^n - W2 Markov structure
    for mi, priv in zip(report.helper_mi.per_trial, report.privacy_leakage_rate.per_trial):
        assert mi <= cfg.n * priv + 1e-9
    assert 0.0 <= report.error_prob.mean <= 1.0


def test_two_enrollment_needs_separable_channels():
    table = np.zeros((2, 2, 2))
    for x in range(2):
        for e in range(2):
            table[x, e, e] = bsc(0.1).matrix[x, e]
    from kls.channels import BroadcastChannel

    sys_corr = EntitySystem(Pmf.uniform(2), (BroadcastChannel(table),) * 2)
    with pytest.raises(UsageError):
        run_binning(sys_corr, BinningConfig(n=2, rates=((0.3, 0.7, 0.0),) * 2))


def test_trend_inside_monotone(sys06):
    h = hb(bsc_star(0.06, 0.06))
    rates = (1 - 0.1 - (h + 0.3), h + 0.3, 0.0)
    report = trend_check(sys06, rates, [2, 4, 6, 8], trials=32, seed=11)
    assert report.case == "inside"
    assert min(report.margins) == pytest.approx(0.1, abs=1e-9)
    assert report.verdict, (report.error_means, report.leak_rate_means)
    assert report.leak_rate_means[-1] < report.leak_rate_means[0]


def test_trend_outside_violation(sys06):
    h = hb(bsc_star(0.06, 0.06))
    rates = ((1 - h) + 0.2, h + 0.1, 0.0)
    report = trend_check(sys06, rates, [2, 4, 6, 8], trials=32, seed=11)
    assert report.case == "outside"
    assert report.verdict
    # secrecy leakage per symbol visibly grows with n
    assert report.leak_rate_means[-1] > report.leak_rate_means[0]


def test_trend_gate_and_single_point(sys06):
    h = hb(bsc_star(0.06, 0.06))
    with pytest.raises(UsageError):
        trend_check(sys06, (1 - h - 0.01, h + 0.01, 0.0), [2, 4], trials=4)
    report = trend_check(
        sys06, (1 - 0.1 - (h + 0.3), h + 0.3, 0.0), [4], trials=4, seed=1
    )
    assert report.error_slopes == ()
    assert report.leak_slopes == ()


def test_trend_csv(sys06, tmp_path):
    from kls.binning import write_trend_csv

    h = hb(bsc_star(0.06, 0.06))
    rates = (1 - 0.1 - (h + 0.3), h + 0.3, 0.0)
    report = trend_check(sys06, rates, [2, 4], trials=4, seed=1)
    path = tmp_path / "trend.csv"
    write_trend_csv(report, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n,error_prob,leak_rate,key_rate"
    assert len(lines) == 3
    assert lines[1].startswith("2,")


def test_two_enrollment_union_error_matches_brute_force():
    """Independent oracle: full 5-sequence enumeration of the union error, n=2."""
    import itertools

    from kls.binning import _kron_power

    n = 2
    mats = [bsc(0.08).matrix, bsc(0.15).matrix]
    sys2 = EntitySystem(
        Pmf.uniform(2), (separate_bc(bsc(0.08)), separate_bc(bsc(0.15)))
    )
    cfg = BinningConfig(n=n, rates=((0.4, 0.6, 0.0), (0.3, 0.8, 0.0)), seed=21, trials=3)
    report = run_binning(sys2, cfg)
    seqs = list(itertools.product(range(2), repeat=n))
    idx = {s: i for i, s in enumerate(seqs)}

    def seq_prob(mat, x, z):
        out = 1.0
        for a, b in zip(x, z):
            out *= mat[a][b]
        return out

    src = np.array([0.5, 0.5])
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        maps, decs = [], []
        for j in range(2):
            ms, mw, mc = bin_counts(n, cfg.rates[j])
            s_map = rng.integers(0, ms, size=4)
            w_map = rng.integers(0, mw, size=4)
            c_map = rng.integers(0, mc, size=4)
            maps.append((s_map, w_map, c_map))
            per = np.einsum("x,xe,xy->ey", src, mats[j], mats[j])
            m1 = _kron_power(per, n)
            dec = {}
            for u in seqs:
                g = (w_map[idx[u]], c_map[idx[u]])
                for y in seqs:
                    members = [v for v in seqs if (w_map[idx[v]], c_map[idx[v]]) == g]
                    dec[(g, y)] = max(members, key=lambda v: (m1[idx[v], idx[y]], -idx[v]))
            decs.append(dec)
        err = 0.0
        for x in seqs:
            for xt1 in seqs:
                for y1 in seqs:
                    p1 = seq_prob(mats[0], x, xt1) * seq_prob(mats[0], x, y1)
                    s1, w1, c1 = maps[0]
                    g1 = (w1[idx[xt1]], c1[idx[xt1]])
                    ok1 = s1[idx[decs[0][(g1, y1)]]] == s1[idx[xt1]]
                    for xt2 in seqs:
                        for y2 in seqs:
                            p2 = seq_prob(mats[1], x, xt2) * seq_prob(mats[1], x, y2)
                            s2, w2, c2 = maps[1]
                            g2 = (w2[idx[xt2]], c2[idx[xt2]])
                            ok2 = s2[idx[decs[1][(g2, y2)]]] == s2[idx[xt2]]
                            if not (ok1 and ok2):
                                err += 0.5**n * p1 * p2
        assert report.error_prob.per_trial[t] == pytest.approx(err, abs=1e-12)

"""Acceptance suite: one test per headline criterion, with pass/fail lines.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Tolerances are pinned here and nowhere else.
"""

import json
import math
import time

import numpy as np
import pytest

from kls.binning import BinningConfig, one_time_pad_check, run_binning, trend_check
from kls.boundary import compare_single_vs_two
from kls.channels import (
    EntitySystem,
    awgn_to_bsc,
    bsc,
    bsc_star,
    degraded_bc,
    separate_bc,
)
from kls.cli import main as cli_main
from kls.polysys import (
    INACTIVE_REDUCED_LABELS,
    build_theorem2_osrb,
    certify_redundancy,
    corner_is_vertex,
    project_and_compare,
    reduced_two_enrollment_system,
)
from kls.probkit import (
    ConditionalPmf,
    JointPmf,
    Pmf,
    binary_entropy,
    binary_entropy_inv,
    conditional_entropy,
    mutual_information,
)
from kls.regions import (
    AuxiliaryChannel,
    eval_pd_ln_outer,
    gs_corner_point,
    info_record,
)


def _verdict(name: str, ok: bool, detail: str = "") -> None:
    print(f"\nACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{name}: {detail}"


def test_acceptance_two_enrollment_leakage_reduction(tmp_path):
    """Matched-channel comparison at p_A = 0.06: ~13.5% lower leakage."""
    start = time.monotonic()
    out = tmp_path / "ex1"
    code = cli_main(
        ["sweep", "--p_A", "0.06", "--mode", "compare", "--grid", "2001", "--out", str(out)]
    )
    elapsed = time.monotonic() - start
    summary = json.loads((out / "summary.json").read_text())
    reduction = summary["leakage_reduction_pct"]
    key_ref = summary["reference_total_key"]
    ok = (
        code == 0
        and abs(key_ref - 0.49171) <= 1e-4
        and abs(reduction - 13.5) <= 1.5
        and elapsed <= 60.0
    )
    _verdict(
        "leakage reduction at p_A=0.06",
        ok,
        f"reduction={reduction:.3f}% (target 13.5 +-1.5), key_ref={key_ref:.5f}, {elapsed:.1f}s",
    )


def test_acceptance_power_split_corner_gain(tmp_path):
    """Two enrollments at 3.83 dB vs one enrollment at full power: ~228.55% key gain."""
    start = time.monotonic()
    out = tmp_path / "ex2"
    code = cli_main(
        ["sweep", "--snr_db", "3.83", "--mode", "compare", "--grid", "2001", "--out", str(out)]
    )
    elapsed = time.monotonic() - start
    summary = json.loads((out / "summary.json").read_text())
    gain = summary["corner_gain_pct"]
    p_two = awgn_to_bsc(3.83)
    ok = (
        code == 0
        and abs(gain - 228.55) <= 10.0
        and abs(p_two - 0.060) <= 0.001
        and elapsed <= 60.0
    )
    _verdict(
        "corner key-rate gain at split vs full power",
        ok,
        f"gain={gain:.2f}% (target 228.55 +-10), awgn_to_bsc(3.83dB)={p_two:.5f}, {elapsed:.1f}s",
    )


@pytest.fixture(scope="module")
def symmetric_instances():
    rng = np.random.default_rng(2718)
    instances = []
    for _ in range(20):
        p = rng.uniform(0.01, 0.45)
        q = rng.uniform(0.01, 0.49)
        sys2 = EntitySystem(Pmf.uniform(2), (separate_bc(bsc(p)), separate_bc(bsc(p))))
        aux = AuxiliaryChannel.bsc_test(q)
        instances.append((p, q, info_record(sys2, [aux, aux])))
    return instances


def test_acceptance_fme_certification(symmetric_instances):
    """Projection equality and the four inactivity certificates, 20 instances."""
    start = time.monotonic()
    failures = []
    for p, q, rec in symmetric_instances:
        raw = build_theorem2_osrb(rec)
        reduced = reduced_two_enrollment_system(rec)
        if not project_and_compare(raw, ["Rc1", "Rc2"], reduced):
            failures.append((p, q, "projection"))
        for label in INACTIVE_REDUCED_LABELS:
            if not certify_redundancy(reduced, label).redundant:
                failures.append((p, q, label))
    elapsed = time.monotonic() - start
    ok = not failures and elapsed <= 120.0
    _verdict(
        "reduced-system certification (20 symmetric instances)",
        ok,
        f"failures={failures or 'none'}, {elapsed:.1f}s (budget 120s)",
    )


def test_acceptance_corner_vertex(symmetric_instances):
    """The corner rate assignment is a vertex of the reduced system (1e-8)."""
    bad = [
        (p, q) for p, q, rec in symmetric_instances if not corner_is_vertex(rec, tol=1e-8)
    ]
    _verdict(
        "corner assignment is a polytope vertex",
        not bad,
        f"failing instances: {bad or 'none'}",
    )


def test_acceptance_containment_and_strong_privacy():
    """100 random degraded systems: inner corners inside the outer bound; zero leakage floor."""
    rng = np.random.default_rng(9001)
    violations = []
    max_privacy_term = 0.0
    for i in range(100):
        bcs = []
        for _ in range(2):
            dec = rng.random((2, 2)) + 0.05
            dec /= dec.sum(axis=1, keepdims=True)
            extra = rng.random((2, 2)) + 0.05
            extra /= extra.sum(axis=1, keepdims=True)
            bcs.append(degraded_bc(ConditionalPmf(dec), ConditionalPmf(extra)))
        src = rng.uniform(0.25, 0.75)
        sys_pd = EntitySystem(Pmf(np.array([src, 1 - src])), tuple(bcs))
        aux = []
        for _ in range(2):
            m = rng.random((2, int(rng.integers(2, 4)))) + 0.02
            m /= m.sum(axis=1, keepdims=True)
            aux.append(AuxiliaryChannel(ConditionalPmf(m)))
        rec = info_record(sys_pd, aux)
        corner = gs_corner_point(rec, "multi_entity")
        classes = [type("C", (), {"kind": "physically_degraded"})() for _ in range(2)]
        report = eval_pd_ln_outer(rec, corner, "gs", classes=classes)
        if not report.member:
            violations.append((i, report.slacks))
        privacy_term = sum(max(0.0, rec.i_ux[j] - rec.i_uy[j]) for j in range(2))
        max_privacy_term = max(max_privacy_term, privacy_term)
    ok = not violations and max_privacy_term <= 1e-9
    _verdict(
        "containment + strong privacy (100 degraded systems)",
        ok,
        f"violations={len(violations)}, max privacy term={max_privacy_term:.2e}",
    )


def test_acceptance_oracle_equivalence():
    """n=1 injective binning matches closed forms; one-time pad leaks <= 1e-12."""
    sys1 = EntitySystem(Pmf.uniform(2), (separate_bc(bsc(0.06)),))
    cascade_error = bsc_star(0.06, 0.06)  # MAP symbol error of the two-hop channel

    rep = one_time_pad_check(sys1, n=1, rates=(1.0, 0.0, 0.0))
    err_ok = abs(rep.error_prob_generated - cascade_error) <= 1e-10
    pad_ok = rep.pad_secrecy_bits <= 1e-12
    chosen_ok = rep.error_prob_chosen == rep.error_prob_generated

    # random-draw oracle at n=1 against direct enumeration, every trial
    cfg = BinningConfig(n=1, rates=((1.0, 1.0, 0.0),), seed=5, trials=16)
    report = run_binning(sys1, cfg)
    m1 = np.array(
        [
            [0.5 * (1 - cascade_error), 0.5 * cascade_error],
            [0.5 * cascade_error, 0.5 * (1 - cascade_error)],
        ]
    )
    trial_ok = True
    for t in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, t])
        s_map = rng.integers(0, 2, size=2)
        w_map = rng.integers(0, 2, size=2)
        rng.integers(0, 1, size=2)
        err = 0.0
        for u in range(2):
            for y in range(2):
                bin_members = [v for v in range(2) if w_map[v] == w_map[u]]
                best = max(bin_members, key=lambda v: (m1[v, y], -v))
                if s_map[best] != s_map[u]:
                    err += m1[u, y]
        trial_ok &= abs(report.error_prob.per_trial[t] - err) <= 1e-10
    ok = err_ok and pad_ok and chosen_ok and trial_ok
    _verdict(
        "oracle equivalence at n=1",
        ok,
        f"grid error={rep.error_prob_generated:.6f} (target {cascade_error:.6f}), "
        f"pad leak={rep.pad_secrecy_bits:.2e}, per-trial match={trial_ok}",
    )


def test_acceptance_trend_property():
    """Inside rates: error and leakage/n non-increasing over n in {2,4,6,8}; outside: violation."""
    sys1 = EntitySystem(Pmf.uniform(2), (separate_bc(bsc(0.06)),))
    h = binary_entropy(bsc_star(0.06, 0.06))
    inside = (1 - 0.1 - (h + 0.3), h + 0.3, 0.0)
    rep_in = trend_check(sys1, inside, [2, 4, 6, 8], trials=32, seed=11)
    outside = ((1 - h) + 0.2, h + 0.1, 0.0)
    rep_out = trend_check(sys1, outside, [2, 4, 6, 8], trials=32, seed=11)
    ok = (
        rep_in.case == "inside"
        and min(rep_in.margins) >= 0.1 - 1e-9
        and rep_in.verdict
        and rep_out.case == "outside"
        and rep_out.verdict
        and rep_out.leak_rate_means[-1] > rep_out.leak_rate_means[0]
    )
    _verdict(
        "binning trend property",
        ok,
        f"inside err={[f'{e:.4f}' for e in rep_in.error_means]} "
        f"leak/n={[f'{e:.4f}' for e in rep_in.leak_rate_means]}; "
        f"outside leak/n={[f'{e:.4f}' for e in rep_out.leak_rate_means]}",
    )


def test_acceptance_probkit_identity_suite():
    """Chain rule, symmetry, data processing, binary-entropy round trip; 1000 instances each."""
    rng = np.random.default_rng(515)
    worst = {"chain": 0.0, "sym": 0.0, "dpi": 0.0, "round": 0.0}
    for _ in range(1000):
        shape = tuple(rng.integers(2, 4, size=2))
        mass = rng.random(shape)
        joint = JointPmf(("A", "B"), mass / mass.sum())
        h_a = joint.entropy_of(["A"])
        h_ab = joint.entropy_of(["A", "B"])
        worst["chain"] = max(
            worst["chain"], abs(h_ab - h_a - conditional_entropy(joint, "B", "A"))
        )
        worst["sym"] = max(
            worst["sym"],
            abs(mutual_information(joint, "A", "B") - mutual_information(joint, "B", "A")),
        )
        px = rng.random(2)
        px /= px.sum()
        a = rng.random((2, 2))
        a /= a.sum(axis=1, keepdims=True)
        b = rng.random((2, 2))
        b /= b.sum(axis=1, keepdims=True)
        chain_mass = np.einsum("x,xe,eu->uex", px, a, b)
        markov = JointPmf(("U", "Xt", "X"), chain_mass)
        worst["dpi"] = max(
            worst["dpi"],
            mutual_information(markov, "U", "X") - mutual_information(markov, "U", "Xt"),
        )
        p = rng.uniform(0.0, 1.0)
        worst["round"] = max(
            worst["round"], abs(binary_entropy_inv(binary_entropy(p)) - min(p, 1 - p))
        )
    ok = (
        worst["chain"] <= 1e-10
        and worst["sym"] <= 1e-10
        and worst["dpi"] <= 1e-10
        and worst["round"] <= 1e-9
    )
    _verdict(
        "information-identity suite",
        ok,
        f"worst: chain={worst['chain']:.2e} sym={worst['sym']:.2e} "
        f"dpi={worst['dpi']:.2e} roundtrip={worst['round']:.2e}",
    )

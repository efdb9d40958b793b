"""CLI contract: exit codes, output formats, determinism."""

import json
import math

import numpy as np
import pytest

from kls.boundary import CSV_HEADER
from kls.channels import bsc, degraded_bc, separate_bc
from kls.cli import main
from kls.probkit import ConditionalPmf


@pytest.fixture()
def channel2(tmp_path):
    path = tmp_path / "ch2.json"
    path.write_text(
        json.dumps(
            {
                "source": [0.5, 0.5],
                "entities": [
                    {"type": "separate_bsc", "p": 0.06},
                    {"type": "separate_bsc", "p": 0.06},
                ],
            }
        )
    )
    return str(path)


@pytest.fixture()
def channel1(tmp_path):
    path = tmp_path / "ch1.json"
    path.write_text(
        json.dumps({"source": [0.5, 0.5], "entities": [{"type": "separate_bsc", "p": 0.06}]})
    )
    return str(path)


@pytest.fixture()
def aux_identity(tmp_path):
    path = tmp_path / "aux.json"
    path.write_text(json.dumps({"aux": [{"type": "identity"}, {"type": "identity"}]}))
    return str(path)


def _corner_rates(tmp_path):
    def hb(p):
        return -p * math.log2(p) - (1 - p) * math.log2(1 - p)

    d = 2 * 0.06 * 0.94
    key = 1 - hb(d)
    leak = 2 * (hb(d) - hb(0.06))
    path = tmp_path / "rates.json"
    path.write_text(
        json.dumps(
            {"key_rates": [key, key], "privacy_leakage": leak, "storage_rates": [hb(d), hb(d)]}
        )
    )
    return str(path)


def test_classify_separate_bsc(channel2, capsys):
    assert main(["classify", channel2, "--grid-resolution", "6"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [e["kind"] for e in data["entities"]] == ["neither", "neither"]
    assert all(e["witness"] is not None for e in data["entities"])


def test_classify_degraded(tmp_path, capsys):
    table = degraded_bc(bsc(0.1), bsc(0.2)).table.tolist()
    path = tmp_path / "pd.json"
    path.write_text(json.dumps({"source": [0.5, 0.5], "entities": [{"type": "explicit", "table": table}]}))
    assert main(["classify", str(path)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["entities"][0]["kind"] == "physically_degraded"
    assert data["entities"][0]["witness"] is None


def test_classify_bad_file(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"source": [0.5, 0.5], "entities": []}))
    assert main(["classify", str(empty)]) == 2
    missing = tmp_path / "nope.json"
    assert main(["classify", str(missing)]) == 2
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert main(["classify", str(garbled)]) == 2


def test_region_member_and_exit_codes(channel2, aux_identity, tmp_path, capsys):
    rates = _corner_rates(tmp_path)
    code = main(
        ["region", channel2, aux_identity, rates, "--setting", "two", "--bound", "inner"]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["member"] is True

    over = json.loads(open(rates).read())
    over["key_rates"][0] += 0.01
    over_path = tmp_path / "over.json"
    over_path.write_text(json.dumps(over))
    assert (
        main(
            [
                "region",
                channel2,
                aux_identity,
                str(over_path),
                "--setting",
                "two",
                "--bound",
                "inner",
            ]
        )
        == 1
    )
    assert (
        main(["region", channel2, str(tmp_path / "missing.json"), rates, "--setting", "two"])
        == 2
    )


def test_region_dimension_mismatch(channel1, tmp_path):
    aux2 = tmp_path / "aux2.json"
    aux2.write_text(json.dumps({"aux": [{"type": "identity"}, {"type": "identity"}]}))
    rates = tmp_path / "r.json"
    rates.write_text(
        json.dumps({"key_rates": [0.1], "privacy_leakage": 0.5, "storage_rates": [0.6]})
    )
    assert main(["region", channel1, str(aux2), str(rates)]) == 2


def test_region_outer_requires_classifiable_channels(channel2, aux_identity, tmp_path):
    rates = _corner_rates(tmp_path)
    # separate BSC measurements are neither degraded nor less-noisy
    code = main(
        [
            "region",
            channel2,
            aux_identity,
            rates,
            "--setting",
            "multi",
            "--bound",
            "outer",
        ]
    )
    assert code == 2


def test_sweep_compare_summary_and_csv(tmp_path, capsys):
    out = tmp_path / "out"
    assert (
        main(["sweep", "--p_A", "0.06", "--mode", "compare", "--grid", "201", "--out", str(out)])
        == 0
    )
    summary = json.loads((out / "summary.json").read_text())
    assert summary["leakage_reduction_pct"] == pytest.approx(13.5, abs=1.5)
    for name in ("curve_single_pA0.06.csv", "curve_two_pA0.06.csv"):
        lines = (out / name).read_text().strip().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 202
        fields = lines[5].split(",")
        assert fields[4] in ("single", "two")
        float(fields[0]), float(fields[1]), float(fields[2]), float(fields[3])


def test_sweep_deterministic_bytes(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert (
            main(
                ["sweep", "--snr_db", "3.83", "--mode", "two", "--grid", "64", "--out", str(out)]
            )
            == 0
        )
    name = "curve_two_snr3.83.csv"
    assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    assert (out_a / "summary.json").read_bytes() == (out_b / "summary.json").read_bytes()


def test_sweep_two_point_grid(tmp_path):
    out = tmp_path / "tiny"
    assert (
        main(["sweep", "--p_A", "0.1", "--mode", "single", "--grid", "2", "--out", str(out)])
        == 0
    )
    lines = (out / "curve_single_pA0.1.csv").read_text().strip().splitlines()
    assert len(lines) == 3


def test_sweep_requires_exactly_one_parameter(tmp_path):
    assert main(["sweep", "--mode", "single", "--out", str(tmp_path)]) == 2
    assert (
        main(["sweep", "--p_A", "0.1", "--snr_db", "3.0", "--mode", "single", "--out", str(tmp_path)])
        == 2
    )


def test_fme_certifies(channel2, aux_identity, capsys):
    assert main(["fme", channel2, aux_identity]) == 0
    out = capsys.readouterr().out
    assert "projection equals reduced system: PASS" in out
    assert "FAIL" not in out


def test_fme_random_aux(channel2, tmp_path):
    aux = tmp_path / "auxq.json"
    aux.write_text(json.dumps({"aux": [{"type": "bsc", "q": 0.17}, {"type": "bsc", "q": 0.17}]}))
    assert main(["fme", channel2, str(aux)]) == 0


def test_fme_tampered_reduced_fails(channel2, aux_identity, tmp_path, capsys):
    from kls.channels import EntitySystem, load_system
    from kls.polysys import reduced_two_enrollment_system
    from kls.regions import AuxiliaryChannel, info_record

    sys_ = load_system(channel2)
    rec = info_record(sys_, [AuxiliaryChannel.identity(2)] * 2)
    tampered = reduced_two_enrollment_system(rec).to_dict()
    for iq in tampered["inequalities"]:
        if iq["label"] == "total_sum_ub:j=1":
            iq["rhs"] += 0.1
    path = tmp_path / "tampered.json"
    path.write_text(json.dumps(tampered))
    assert main(["fme", channel2, aux_identity, "--reduced-json", str(path)]) == 1
    assert "projection equals reduced system: FAIL" in capsys.readouterr().out


def test_sim_deterministic_and_caps(channel1, capsys, tmp_path):
    argv = ["sim", channel1, "--n", "4", "--rs", "0.09", "--rw", "0.81", "--trials", "3", "--seed", "7"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    second = capsys.readouterr().out
    assert first == second
    report = json.loads(first)
    assert report["n"] == 4 and report["trials"] == 3
    assert main(["sim", channel1, "--n", "30", "--rs", "0.1", "--rw", "0.9"]) == 2


def test_config_overrides_flags(channel1, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "seed": 5}))
    argv = [
        "sim", channel1, "--n", "8", "--rs", "0.09", "--rw", "0.81",
        "--trials", "2", "--seed", "1", "--config", str(cfg),
    ]
    assert main(argv) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n"] == 3 and report["seed"] == 5
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"not_a_flag": 1}))
    assert main(argv[:-1] + [str(bad)]) == 2


def test_help_lists_flags(capsys):
    for cmd, flags in [
        ("classify", ["--tol", "--grid-resolution", "--aux-cardinality"]),
        ("region", ["--model", "--setting", "--bound", "--tol"]),
        ("sweep", ["--p_A", "--snr_db", "--mode", "--grid", "--out"]),
        ("fme", ["--tol", "--reduced-json"]),
        ("sim", ["--n", "--rs", "--rw", "--rc", "--trials", "--seed"]),
    ]:
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for flag in flags:
            assert flag in out


def test_unknown_flag_is_an_error(channel1, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["classify", channel1, "--frobnicate"])
    assert exc.value.code == 2


def test_floats_printed_with_twelve_significant_digits(tmp_path, capsys):
    out = tmp_path / "fmt"
    main(["sweep", "--p_A", "0.06", "--mode", "single", "--grid", "11", "--out", str(out)])
    rows = (out / "curve_single_pA0.06.csv").read_text().strip().splitlines()[1:]
    for row in rows:
        for field in row.split(",")[:4]:
            assert len(field.replace(".", "").replace("-", "").lstrip("0")) <= 13

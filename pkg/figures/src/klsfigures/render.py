"""Render privacy-leakage vs. secret-key rate figures from kls sweep output.

This package reads only the delimited contract of the computation side: curve
CSVs with the header ``q,key_rate,leakage_rate,storage_rate,mode`` and the
``summary.json`` written next to them. Nothing numerical is recomputed here;
annotation percentages are copied from the summary verbatim.

Invocation: ``figures <spec.json>`` with a spec of the form

    {"inputs": ["ex2/curve_single_snr3.83.csv", "ex2/curve_two_snr3.83.csv"],
     "summary": "ex2/summary.json",
     "output": "ex2/comparison.svg",
     "xlabel": "secret-key rate (bits/symbol)",
     "ylabel": "privacy-leakage rate (bits/symbol)",
     "title": "single vs two enrollments",
     "annotate_gain": true,
     "annotate_corners": true}

Output format follows the file extension (SVG or PDF).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

EXPECTED_HEADER = ["q", "key_rate", "leakage_rate", "storage_rate", "mode"]


class FigureError(Exception):
    """Bad spec, missing file, or a CSV that does not match the contract."""


@dataclass
class Curve:
    path: str
    q: List[float]
    key_rate: List[float]
    leakage_rate: List[float]
    storage_rate: List[float]
    mode: str


@dataclass
class FigureSpec:
    inputs: List[str]
    output: str
    summary: Optional[str] = None
    xlabel: str = "secret-key rate (bits/symbol)"
    ylabel: str = "privacy-leakage rate (bits/symbol)"
    title: Optional[str] = None
    annotate_gain: bool = False
    annotate_corners: bool = False

    @staticmethod
    def load(path: str) -> "FigureSpec":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise FigureError(f"cannot read figure spec {path!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise FigureError("figure spec must be a JSON object")
        known = {f for f in FigureSpec.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise FigureError(f"unknown figure spec keys: {sorted(unknown)}")
        if not data.get("inputs"):
            raise FigureError("figure spec needs at least one input curve")
        if not data.get("output"):
            raise FigureError("figure spec needs an output path")
        base = os.path.dirname(os.path.abspath(path))

        def resolve(p):
            return p if os.path.isabs(p) else os.path.join(base, p)

        spec = FigureSpec(
            inputs=[resolve(p) for p in data["inputs"]],
            output=resolve(data["output"]),
            summary=resolve(data["summary"]) if data.get("summary") else None,
            xlabel=data.get("xlabel", FigureSpec.xlabel),
            ylabel=data.get("ylabel", FigureSpec.ylabel),
            title=data.get("title"),
            annotate_gain=bool(data.get("annotate_gain", False)),
            annotate_corners=bool(data.get("annotate_corners", False)),
        )
        for p in spec.inputs + ([spec.summary] if spec.summary else []):
            if not os.path.exists(p):
                raise FigureError(f"referenced file does not exist: {p}")
        return spec


def load_curve(path: str) -> Curve:
    """Parse one curve CSV, validating the exact column contract."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"{path}: empty file") from None
        if header != EXPECTED_HEADER:
            raise FigureError(
                f"{path}: column mismatch: expected {EXPECTED_HEADER}, found {header}"
            )
        cols = {name: [] for name in EXPECTED_HEADER}
        for row in reader:
            if len(row) != len(EXPECTED_HEADER):
                raise FigureError(f"{path}: row with {len(row)} fields: {row}")
            for name, value in zip(EXPECTED_HEADER, row):
                cols[name].append(value)
    if not cols["mode"]:
        raise FigureError(f"{path}: no data rows")
    modes = sorted(set(cols["mode"]))
    if len(modes) != 1:
        raise FigureError(f"{path}: mixed mode column {modes}; one curve per file")
    try:
        return Curve(
            path=path,
            q=[float(v) for v in cols["q"]],
            key_rate=[float(v) for v in cols["key_rate"]],
            leakage_rate=[float(v) for v in cols["leakage_rate"]],
            storage_rate=[float(v) for v in cols["storage_rate"]],
            mode=modes[0],
        )
    except ValueError as exc:
        raise FigureError(f"{path}: non-numeric field: {exc}") from exc


def _annotation_lines(summary: dict) -> List[str]:
    lines = []
    if summary.get("leakage_reduction_pct") is not None:
        lines.append(
            f"leakage reduction ≈{summary['leakage_reduction_pct']:.2f}% "
            f"at key rate {summary.get('reference_total_key', float('nan')):.4f}"
        )
    if summary.get("corner_gain_pct") is not None:
        lines.append(f"corner key-rate gain ≈{summary['corner_gain_pct']:.2f}%")
    return lines


def render(spec: FigureSpec) -> str:
    """Draw the figure and write it to spec.output; returns the output path."""
    curves = [load_curve(p) for p in spec.inputs]
    summary = None
    if spec.summary:
        with open(spec.summary, "r", encoding="utf-8") as fh:
            summary = json.load(fh)

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    styles = {"single": "-", "two": "--"}
    for curve in curves:
        order = sorted(range(len(curve.key_rate)), key=lambda i: curve.key_rate[i])
        xs = [curve.key_rate[i] for i in order]
        ys = [curve.leakage_rate[i] for i in order]
        label = {"single": "single enrollment", "two": "two enrollments (sum rates)"}.get(
            curve.mode, curve.mode
        )
        ax.plot(xs, ys, styles.get(curve.mode, "-"), label=label, linewidth=1.6)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left")

    if spec.annotate_corners and summary is not None:
        corner_key = summary.get("reference_total_key")
        corner_leak = summary.get("corner_leak_single")
        if corner_key is not None and corner_leak is not None:
            ax.plot([corner_key], [corner_leak], "o", color="black", markersize=5)
        key_two = summary.get("key_two_at_corner_leak")
        if key_two is not None and corner_leak is not None:
            ax.plot([key_two], [corner_leak], "s", color="gray", markersize=5)

    if spec.annotate_gain and summary is not None:
        lines = _annotation_lines(summary)
        if lines:
            ax.text(
                0.97,
                0.05,
                "\n".join(lines),
                transform=ax.transAxes,
                ha="right",
                va="bottom",
                fontsize=9,
                bbox={"boxstyle": "round", "facecolor": "white", "alpha": 0.85},
            )

    ext = os.path.splitext(spec.output)[1].lower()
    if ext not in (".svg", ".pdf"):
        raise FigureError(f"output must be .svg or .pdf, got {spec.output!r}")
    os.makedirs(os.path.dirname(spec.output) or ".", exist_ok=True)
    fig.savefig(spec.output, format=ext[1:])
    plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render privacy-leakage vs secret-key rate figures from kls CSV output.",
    )
    parser.add_argument("spec", help="figure spec JSON")
    args = parser.parse_args(argv)
    try:
        out = render(FigureSpec.load(args.spec))
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

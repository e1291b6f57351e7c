"""Shared plumbing for the figure scripts: CSV loading with column checks,
the figure spec, and the save path.

The scripts only read CSVs emitted by the scheduler CLI; nothing is
recomputed here.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

KINDS = ("throughput_bars", "scalability_lines", "validation_hist", "breakdown_stack")


class MissingColumnError(Exception):
    pass


@dataclass(frozen=True)
class FigureSpec:
    inputs: tuple[str, ...]
    kind: str
    output: str


def read_rows(path: str, required: tuple[str, ...]) -> list[dict]:
    """Load a CSV as dicts, failing loudly if a required column is absent.

    An empty file (or one with only a header) yields an empty list.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = [col for col in required if col not in reader.fieldnames]
        if missing:
            raise MissingColumnError(
                f"{path}: missing column(s) {', '.join(missing)} "
                f"(have: {', '.join(reader.fieldnames)})"
            )
        return list(reader)


def empty_figure(message: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.set_axis_off()
    ax.text(0.5, 0.5, message, ha="center", va="center", transform=ax.transAxes)
    return fig


def save(fig, output: str) -> None:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)


def build_main(kind: str, render):
    """Standard --in/--out entry point shared by all four scripts."""

    def main(argv=None) -> int:
        parser = argparse.ArgumentParser(description=f"render a {kind} figure")
        parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                            help="input CSV path(s)")
        parser.add_argument("--out", dest="output", required=True,
                            help="output image path")
        args = parser.parse_args(argv)
        spec = FigureSpec(tuple(args.inputs), kind, args.output)
        try:
            fig = render(spec)
        except MissingColumnError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        save(fig, spec.output)
        print(f"wrote {spec.output}")
        return 0

    return main

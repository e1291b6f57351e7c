"""Stacked energy-component bars per method, normalized as emitted by the
breakdown CSV (components as fractions of the reference method's total)."""

from __future__ import annotations

import sys
import warnings

import matplotlib.pyplot as plt

from .common import build_main, empty_figure, read_rows

COLUMNS = ("method", "component", "energy_j", "normalized")
ORDER = ("mac", "nop", "dram")


def render(spec):
    rows = read_rows(spec.inputs[0], COLUMNS)
    if not rows:
        warnings.warn(f"{spec.inputs[0]}: empty CSV, emitting empty axes")
        return empty_figure("no energy rows")
    methods: list[str] = []
    for r in rows:
        if r["method"] not in methods:
            methods.append(r["method"])
    values = {
        (r["method"], r["component"]): float(r["normalized"]) for r in rows
    }
    fig, ax = plt.subplots(figsize=(1.5 + 1.2 * len(methods), 4))
    bottoms = [0.0] * len(methods)
    for comp in ORDER:
        heights = [values.get((m, comp), 0.0) for m in methods]
        ax.bar(range(len(methods)), heights, bottom=bottoms, label=comp, width=0.6)
        bottoms = [b + h for b, h in zip(bottoms, heights)]
    ax.set_xticks(range(len(methods)), methods)
    ax.set_ylabel("energy normalized to reference total")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


main = build_main("breakdown_stack", render)

if __name__ == "__main__":
    sys.exit(main())

"""Scalability lines: per-method throughput over chiplet count, already
normalized to the smallest count by the sweep CSV."""

from __future__ import annotations

import sys
import warnings

import matplotlib.pyplot as plt

from .common import build_main, empty_figure, read_rows

COLUMNS = ("network", "chiplets", "method", "normalized_throughput")


def render(spec):
    rows = [
        r for r in read_rows(spec.inputs[0], COLUMNS)
        if r["normalized_throughput"] != ""
    ]
    if not rows:
        warnings.warn(f"{spec.inputs[0]}: no feasible rows, emitting empty axes")
        return empty_figure("no feasible sweep cells")
    networks = sorted({r["network"] for r in rows})
    series: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for r in rows:
        key = (r["network"], r["method"])
        series.setdefault(key, []).append(
            (int(r["chiplets"]), float(r["normalized_throughput"]))
        )
    fig, ax = plt.subplots(figsize=(6, 4))
    for (net, method), points in sorted(series.items()):
        points.sort()
        label = method if len(networks) == 1 else f"{net}:{method}"
        ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=label)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("chiplets")
    ax.set_ylabel("throughput normalized to smallest package")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


main = build_main("scalability_lines", render)

if __name__ == "__main__":
    sys.exit(main())

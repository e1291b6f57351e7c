"""Grouped throughput bars from a compare sweep: one group per
(network, chiplet count), one bar per method, normalized within each group to
the sequential method when present (first feasible method otherwise)."""

from __future__ import annotations

import sys
import warnings

import matplotlib.pyplot as plt

from .common import build_main, empty_figure, read_rows

COLUMNS = ("network", "chiplets", "method", "feasible", "throughput_sps")


def render(spec):
    rows = read_rows(spec.inputs[0], COLUMNS)
    feasible = [r for r in rows if r["feasible"] == "True"]
    if not feasible:
        warnings.warn(f"{spec.inputs[0]}: no feasible rows, emitting empty axes")
        return empty_figure("no feasible sweep cells")
    groups: dict[tuple[str, str], dict[str, float]] = {}
    methods: list[str] = []
    for r in rows:
        if r["method"] not in methods:
            methods.append(r["method"])
    for r in feasible:
        groups.setdefault((r["network"], r["chiplets"]), {})[r["method"]] = float(
            r["throughput_sps"]
        )
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(groups)), 4))
    width = 0.8 / len(methods)
    for mi, method in enumerate(methods):
        xs, ys = [], []
        for gi, (key, cell) in enumerate(sorted(groups.items())):
            if method not in cell:
                continue
            base = cell.get("sequential") or cell[next(iter(sorted(cell)))]
            xs.append(gi + mi * width)
            ys.append(cell[method] / base)
        ax.bar(xs, ys, width=width, label=method)
    ax.set_xticks(
        [gi + 0.4 - width / 2 for gi in range(len(groups))],
        [f"{net}@{c}" for net, c in sorted(groups)],
        rotation=30, ha="right",
    )
    ax.set_ylabel("normalized throughput")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


main = build_main("throughput_bars", render)

if __name__ == "__main__":
    sys.exit(main())

"""Latency histogram of every feasible schedule from an exhaustive validation
run, with a marker at the heuristic's latency.

Takes the distribution CSV and, when given, the summary CSV carrying the
heuristic latency and rank.
"""

from __future__ import annotations

import sys
import warnings

import matplotlib.pyplot as plt

from .common import build_main, empty_figure, read_rows

DIST_COLUMNS = ("candidate_id", "latency", "feasible")
SUMMARY_COLUMNS = ("heuristic_latency", "rank_percent")


def render(spec):
    rows = read_rows(spec.inputs[0], DIST_COLUMNS)
    latencies = [float(r["latency"]) for r in rows if r["feasible"] == "True"]
    if not latencies:
        warnings.warn(f"{spec.inputs[0]}: no feasible candidates, emitting empty axes")
        return empty_figure("no feasible candidates")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(latencies, bins=60, weights=[1 / len(latencies)] * len(latencies))
    ax.set_xlabel("processing time (s)")
    ax.set_ylabel("fraction of valid schedules")
    if len(spec.inputs) > 1:
        summary = read_rows(spec.inputs[1], SUMMARY_COLUMNS)
        if summary:
            heur = float(summary[0]["heuristic_latency"])
            rank = float(summary[0]["rank_percent"])
            ax.axvline(heur, color="crimson", linestyle="--",
                       label=f"heuristic (top {rank:.2f}%)")
            ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


main = build_main("validation_hist", render)

if __name__ == "__main__":
    sys.exit(main())

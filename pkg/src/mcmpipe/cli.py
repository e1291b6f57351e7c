"""Command-line front end.

Subcommands: ``schedule`` (run one scheduler, write schedule/report files),
``compare`` (sweep networks x chiplet counts x methods into CSVs),
``validate`` (exhaustive-oracle distribution and the heuristic's rank),
``breakdown`` (per-cluster load and energy-component CSVs), and ``count``
(exact design-space size).

Exit codes: 0 success, 1 parse/invariant error, 2 no feasible schedule,
3 search space over the enumeration limit.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import (
    InvariantError,
    NoFeasibleScheduleError,
    ParseError,
    SearchSpaceTooLargeError,
)
from .io import load_hardware, load_network, write_csv, write_json
from .model import HardwareConfig, Network, default_hardware, layer_stats, most_square_mesh
from .search import (
    BaselineKind,
    SearchResult,
    design_space_size,
    exhaustive_search,
    percentile_rank,
    schedule_baseline,
    schedule_scope,
    search_segment,
)
from .io import schedule_to_dict
from .zoo import BUILTIN_NETWORKS, builtin_network

METHODS = ("scope", "sequential", "full_pipeline", "segmented")
DEFAULT_MAX_ENUM = 10_000_000


def _resolve_network(spec: str) -> tuple[Network, dict]:
    if spec.lower() in BUILTIN_NETWORKS:
        return builtin_network(spec), {"builtin": spec.lower()}
    return load_network(spec), {"path": spec}


def _resolve_hardware(args) -> HardwareConfig:
    if args.hw:
        hw = load_hardware(args.hw)
        if args.chiplets and args.chiplets != hw.num_chiplets:
            rows, cols = most_square_mesh(args.chiplets)
            hw = HardwareConfig(
                **{
                    **{f: getattr(hw, f) for f in hw.__dataclass_fields__},
                    "num_chiplets": args.chiplets,
                    "mesh_rows": rows,
                    "mesh_cols": cols,
                }
            )
        return hw
    return default_hardware(args.chiplets or 16)


def _run_method(method: str, net: Network, hw: HardwareConfig, m: int) -> SearchResult:
    if method == "scope":
        return schedule_scope(net, hw, m)
    return schedule_baseline(BaselineKind(method), net, hw, m)


def _max_enum(args) -> int:
    if getattr(args, "max_enum", None):
        return args.max_enum
    env = os.environ.get("SCOPE_MAX_ENUM")
    return int(env) if env else DEFAULT_MAX_ENUM


def _layer_csv_rows(report):
    for si, seg in enumerate(report.segments):
        for ci, cl in enumerate(seg.clusters):
            for lc in cl.layers:
                yield (si, ci, lc.layer, lc.t_pre, lc.t_comp, lc.t_comm, lc.t_layer)


def _cluster_counts(result: SearchResult) -> str:
    return "|".join(str(len(seg.clusters)) for seg in result.schedule.segments)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_schedule(args) -> int:
    net, net_ref = _resolve_network(args.net)
    hw = _resolve_hardware(args)
    result = _run_method(args.method, net, hw, args.samples)
    out = Path(args.out)
    write_json(out / "schedule.json", schedule_to_dict(
        result.schedule, network_ref=net_ref, hw=hw, m=args.samples, method=args.method,
    ))
    write_json(out / "report.json", result.report.to_dict())
    write_csv(
        out / "report_layers.csv",
        ["segment", "cluster", "layer", "t_pre", "t_comp", "t_comm", "t_layer"],
        _layer_csv_rows(result.report),
    )
    rep = result.report
    print(f"t_system: {rep.t_system:.6e} s")
    print(f"throughput: {args.samples / rep.t_system:.6e} samples/s")
    print(
        f"energy: mac={rep.energy.e_mac:.6e} J nop={rep.energy.e_nop:.6e} J "
        f"dram={rep.energy.e_dram:.6e} J total={rep.energy.total:.6e} J"
    )
    print(f"outputs: {out / 'schedule.json'} {out / 'report.json'} {out / 'report_layers.csv'}")
    return 0


def cmd_compare(args) -> int:
    nets = args.nets.split(",")
    counts = [int(c) for c in args.chiplets.split(",")]
    methods = args.methods.split(",")
    for meth in methods:
        if meth not in METHODS:
            raise ParseError(f"unknown method {meth!r}; choose from {', '.join(METHODS)}")
    rows = []
    results: dict[tuple[str, int, str], SearchResult | None] = {}
    any_ok = False
    for net_spec in nets:
        net, _ = _resolve_network(net_spec)
        for c in counts:
            hw = default_hardware(c) if not args.hw else _resolve_hardware(
                argparse.Namespace(hw=args.hw, chiplets=c)
            )
            for meth in methods:
                key = (net_spec, c, meth)
                try:
                    res = _run_method(meth, net, hw, args.samples)
                except NoFeasibleScheduleError as exc:
                    results[key] = None
                    rows.append([net_spec, c, meth, False, "", "", "", "", "", "", "", "", str(exc)])
                    continue
                results[key] = res
                rep = res.report
                any_ok = True
                rows.append([
                    net_spec, c, meth, True,
                    rep.t_system, args.samples / rep.t_system,
                    rep.energy.e_mac, rep.energy.e_nop, rep.energy.e_dram, rep.energy.total,
                    len(res.schedule.segments), _cluster_counts(res), "",
                ])
    out = Path(args.out)
    write_csv(
        out / "compare.csv",
        ["network", "chiplets", "method", "feasible", "latency_s", "throughput_sps",
         "e_mac_j", "e_nop_j", "e_dram_j", "e_total_j", "num_segments", "cluster_counts",
         "error"],
        rows,
    )
    norm_rows = []
    for net_spec in nets:
        for meth in methods:
            base = None
            for c in sorted(counts):
                res = results.get((net_spec, c, meth))
                if res is not None:
                    base = args.samples / res.report.t_system
                    break
            for c in counts:
                res = results.get((net_spec, c, meth))
                if res is None:
                    norm_rows.append([net_spec, c, meth, "", ""])
                else:
                    tput = args.samples / res.report.t_system
                    norm_rows.append([net_spec, c, meth, tput, tput / base])
    write_csv(
        out / "throughput_normalized.csv",
        ["network", "chiplets", "method", "throughput_sps", "normalized_throughput"],
        norm_rows,
    )
    print(f"outputs: {out / 'compare.csv'} {out / 'throughput_normalized.csv'}")
    return 0 if any_ok else 2


def cmd_validate(args) -> int:
    net, _ = _resolve_network(args.net)
    hw = _resolve_hardware(args)
    limit = _max_enum(args)
    length = len(net)
    size = design_space_size(length, hw.num_chiplets)
    if size > limit:
        print(
            f"search space has {size} candidates "
            f"(limit {limit}); exhaustive validation is impossible",
            file=sys.stderr,
        )
        return 3
    segment = (0, length)
    heur = search_segment(segment, net, hw, args.samples)
    ex = exhaustive_search(segment, net, hw, args.samples, max_candidates=limit)
    rank = percentile_rank(ex.distribution, heur.latency)
    out = Path(args.out)
    write_csv(
        out / "distribution.csv",
        ["candidate_id", "latency", "feasible"],
        [[cid, lat if lat is not None else "", ok] for cid, lat, ok in ex.distribution],
    )
    write_csv(
        out / "summary.csv",
        ["network", "chiplets", "layers", "candidates_total", "candidates_feasible",
         "heuristic_latency", "optimum_latency", "rank_percent", "ratio_to_optimum"],
        [[net.name, hw.num_chiplets, length, ex.candidates_total, ex.candidates_feasible,
          heur.latency, ex.best_latency, rank, heur.latency / ex.best_latency]],
    )
    print(f"candidates: {ex.candidates_total} ({ex.candidates_feasible} feasible)")
    print(f"heuristic latency: {heur.latency:.6e} s (optimum {ex.best_latency:.6e} s)")
    print(f"heuristic rank: top {rank:.4f}% of feasible schedules")
    print(f"outputs: {out / 'distribution.csv'} {out / 'summary.csv'}")
    return 0


def cmd_breakdown(args) -> int:
    net, _ = _resolve_network(args.net)
    hw = _resolve_hardware(args)
    methods = args.methods.split(",")
    load_rows = []
    energy = {}
    for meth in methods:
        res = _run_method(meth, net, hw, args.samples)
        loads = []
        for si, seg in enumerate(res.schedule.segments):
            for ci, cl in enumerate(seg.clusters):
                macs = sum(layer_stats(net.layers[li]).macs for li in range(cl.start, cl.end))
                loads.append((si, ci, cl.start, cl.end, macs))
        peak = max(l[4] for l in loads)
        for si, ci, s, e, macs in loads:
            load_rows.append([meth, si, ci, s, e, macs, macs / peak])
        energy[meth] = res.report.energy
    ref = energy.get("scope", energy[methods[0]])
    energy_rows = []
    for meth in methods:
        e = energy[meth]
        for comp, val in (("mac", e.e_mac), ("nop", e.e_nop), ("dram", e.e_dram)):
            energy_rows.append([meth, comp, val, val / ref.total])
    out = Path(args.out)
    write_csv(
        out / "loads.csv",
        ["method", "segment", "cluster", "start", "end", "macs", "normalized_load"],
        load_rows,
    )
    write_csv(
        out / "energy.csv",
        ["method", "component", "energy_j", "normalized"],
        energy_rows,
    )
    print(f"outputs: {out / 'loads.csv'} {out / 'energy.csv'}")
    return 0


def cmd_count(args) -> int:
    if args.net:
        net, _ = _resolve_network(args.net)
        length = len(net)
    elif args.layers:
        length = args.layers
    else:
        raise ParseError("count needs --net or --layers")
    size = design_space_size(length, args.chiplets or 16)
    print(f"layers: {length}")
    print(f"chiplets: {args.chiplets or 16}")
    print(f"design space size: {size}")
    print(f"magnitude: {size:.3e}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcmpipe",
        description="Merged-pipeline scheduling and cost estimation for chiplet packages",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--net", required=True, help="built-in network name or JSON path")
        p.add_argument("--hw", help="hardware JSON path")
        p.add_argument("--chiplets", type=int, help="chiplet count (most-square mesh)")
        p.add_argument("--samples", type=int, default=64, help="samples per run (default 64)")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("schedule", help="run one scheduling method")
    common(p)
    p.add_argument("--method", default="scope", choices=METHODS)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("compare", help="sweep networks x chiplet counts x methods")
    p.add_argument("--nets", required=True, help="comma-separated network names/paths")
    p.add_argument("--chiplets", required=True, help="comma-separated chiplet counts")
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--hw", help="hardware JSON path (chiplet count overridden per cell)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="exhaustive-oracle validation of the search")
    common(p)
    p.add_argument("--max-enum", type=int, help="candidate limit (default SCOPE_MAX_ENUM or 1e7)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("breakdown", help="per-cluster load and energy breakdown")
    common(p)
    p.add_argument("--methods", default="scope,segmented")
    p.set_defaults(func=cmd_breakdown)

    p = sub.add_parser("count", help="design-space size")
    p.add_argument("--net", help="built-in network name or JSON path")
    p.add_argument("--layers", type=int, help="layer count (alternative to --net)")
    p.add_argument("--chiplets", type=int, default=16)
    p.set_defaults(func=cmd_count)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InvariantError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NoFeasibleScheduleError as exc:
        print(f"no feasible schedule: {exc}", file=sys.stderr)
        return 2
    except SearchSpaceTooLargeError as exc:
        print(f"search space too large: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

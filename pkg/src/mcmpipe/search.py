"""Schedule search: cluster merging, region allocation, partition scan,
segment division, baselines, and the exhaustive oracle.

The heuristic explores a pruned grid instead of the full space: cluster
divisions come from a merge table built by repeatedly joining the adjacent
pair with the most similar parallelism; region sizes start proportional to
cluster load and are refined by moving one chiplet at a time from the
fastest to the slowest stage; per-layer partitions are restricted to a
single WSP-to-ISP transition point.  The grid has O(L^2) outer candidates,
so cost grows polynomially with depth instead of exponentially.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations
from math import comb, inf

from .cost import CostReport, Evaluator, SegmentPlan, _region_footprint, evaluate
from .errors import (
    LayerTooLargeError,
    NoFeasibleScheduleError,
    SearchSpaceTooLargeError,
    TooManyClustersError,
)
from .model import (
    ClusterAssignment,
    HardwareConfig,
    LayerKind,
    Network,
    Partition,
    Schedule,
    SegmentAssignment,
    layer_stats,
)
from .placement import Mesh, zigzag_place

Range = tuple[int, int]


class BaselineKind(enum.Enum):
    SEQUENTIAL = "sequential"
    FULL_PIPELINE = "full_pipeline"
    SEGMENTED = "segmented"


# ---------------------------------------------------------------------------
# Cluster merge table


def compute_parallelism(cluster: Range, net: Network) -> float:
    """MAC-weighted geometric mean of the member layers' spatial output sizes.

    The spatial output (h_out * w_out, 1 for fc) is the dimension a region can
    tile freely, so layers with similar values use a shared region alike.
    """
    start, end = cluster
    if end <= start:
        raise ValueError("cluster range is empty")
    log_acc = 0.0
    w_acc = 0
    for li in range(start, end):
        layer = net.layers[li]
        par = layer.h_out * layer.w_out if layer.kind is LayerKind.CONV else 1
        w = layer_stats(layer).macs
        log_acc += w * math.log(par)
        w_acc += w
    return math.exp(log_acc / w_acc)


def gen_cmt(segment: Range, net: Network) -> dict[int, tuple[Range, ...]]:
    """Cluster merge table: one division of ``segment`` per cluster count.

    Level L is all singletons; each lower level merges the adjacent pair whose
    parallelism ratio is closest to 1, so level N-1 always equals level N with
    exactly one adjacent merge applied.  Equal offsets (common in long runs of
    same-resolution layers) are broken by the smallest merged MAC load and
    then by the lowest index: merging the lightest tied pair keeps cluster
    loads level instead of snowballing one cluster through the run.
    """
    start, end = segment
    length = end - start
    clusters = []
    for li in range(start, end):
        layer = net.layers[li]
        par = layer.h_out * layer.w_out if layer.kind is LayerKind.CONV else 1
        w = layer_stats(layer).macs
        clusters.append([li, li + 1, w * math.log(par), w])
    cmt = {length: tuple((c[0], c[1]) for c in clusters)}
    for n in range(length, 1, -1):
        pars = [math.exp(c[2] / c[3]) for c in clusters]
        best = None
        for j in range(n - 1):
            off = abs(pars[j] / pars[j + 1] - 1)
            if off < 1e-9:
                # log-space roundoff must not outrank the load tie-break
                off = 0.0
            key = (off, clusters[j][3] + clusters[j + 1][3], j)
            if best is None or key < best:
                best = key
        j = best[2]
        a, b = clusters[j], clusters[j + 1]
        clusters[j:j + 2] = [[a[0], b[1], a[2] + b[2], a[3] + b[3]]]
        cmt[n - 1] = tuple((c[0], c[1]) for c in clusters)
    return cmt


# ---------------------------------------------------------------------------
# Region allocation


def proportional_allocate(clusters: tuple[Range, ...], net: Network, num_chiplets: int) -> tuple[int, ...]:
    """Split ``num_chiplets`` across clusters proportionally to their MAC
    loads, largest-remainder rounding, every region at least one chiplet.
    """
    n = len(clusters)
    if n > num_chiplets:
        raise TooManyClustersError(f"{n} clusters need more than {num_chiplets} chiplets")
    loads = [
        sum(layer_stats(net.layers[li]).macs for li in range(s, e)) for s, e in clusters
    ]
    total = sum(loads)
    sizes = [num_chiplets * load // total for load in loads]
    remainders = [num_chiplets * load % total for load in loads]
    leftover = num_chiplets - sum(sizes)
    for j in sorted(range(n), key=lambda j: (-remainders[j], j))[:leftover]:
        sizes[j] += 1
    # Rounding can starve tiny clusters; top them up from the largest region.
    for j in range(n):
        while sizes[j] == 0:
            k = max(range(n), key=lambda i: (sizes[i], -i))
            if sizes[k] < 2:
                raise TooManyClustersError("cannot give every cluster a chiplet")
            sizes[k] -= 1
            sizes[j] += 1
    return tuple(sizes)


def _min_feasible_size(weights: list[int], cparts: list[Partition], cap: int, c_max: int) -> int | None:
    """Smallest region size whose weight footprint fits, or None.

    The footprint is non-increasing in region size (a WSP layer's all-gather
    growth is cancelled by its shrinking resident tile), so the first fit is
    safe to grow from.
    """
    for n in range(1, c_max + 1):
        if _region_footprint(weights, cparts, n, False, cap).feasible:
            return n
    return None


def _ensure_capacity(
    ev: Evaluator,
    ranges: tuple[Range, ...],
    sizes: tuple[int, ...],
    parts: tuple[Partition, ...],
    streaming: tuple[bool, ...],
) -> tuple[int, ...] | None:
    """Raise starved regions to the size their resident weights require.

    The MAC-proportional start can hand a weight-heavy but compute-light
    cluster fewer chiplets than its tiles need; regions keep their load
    proportions over the chiplets left after the capacity floors.  Returns
    None when no allocation can fit.
    """
    cap = ev.cap
    c = ev.hw.num_chiplets
    seg_start = ranges[0][0]
    cluster_w = []
    cluster_p = []
    ok = True
    for j, (s, e) in enumerate(ranges):
        w = [ev.w_bytes[li] for li in range(s, e)]
        p = [parts[li - seg_start] for li in range(s, e)]
        cluster_w.append(w)
        cluster_p.append(p)
        if not streaming[j] and not _region_footprint(w, p, sizes[j], False, cap).feasible:
            ok = False
    if ok:
        return sizes
    floors = []
    for j in range(len(ranges)):
        if streaming[j]:
            floors.append(1)
            continue
        f = _min_feasible_size(cluster_w[j], cluster_p[j], cap, c)
        if f is None:
            return None
        floors.append(f)
    spare = c - sum(floors)
    if spare < 0:
        return None
    loads = [
        sum(ev.macs[li] for li in range(s, e)) for s, e in ranges
    ]
    total = sum(loads)
    extras = [spare * load // total for load in loads]
    remainders = [spare * load % total for load in loads]
    leftover = spare - sum(extras)
    order = sorted(range(len(ranges)), key=lambda j: (-remainders[j], j))
    for j in order[:leftover]:
        extras[j] += 1
    return tuple(f + x for f, x in zip(floors, extras))


def _rebalance(
    ev: Evaluator,
    ranges: tuple[Range, ...],
    sizes: tuple[int, ...],
    parts: tuple[Partition, ...],
    streaming: tuple[bool, ...],
    m: int,
) -> tuple[tuple[int, ...], float, list[float], int]:
    """Move chiplets from the fastest to the slowest stage while the segment
    latency strictly improves and the move keeps every region non-empty and
    weight-feasible.  Returns (sizes, latency, cluster_times, evaluations).
    """
    res = ev.segment_eval(SegmentPlan(ranges, sizes, parts, streaming), m)
    evals = 1
    best_lat = res.latency if res.feasible else inf
    best = (sizes, best_lat, res.cluster_times)
    n = len(ranges)
    if n == 1 or not res.cluster_times:
        return best[0], best[1], best[2], evals
    cur_sizes, cur_times = list(sizes), res.cluster_times
    for _ in range(ev.hw.num_chiplets * n):
        hot = max(range(n), key=lambda j: (cur_times[j], -j))
        cold = min(range(n), key=lambda j: (cur_times[j], j))
        if hot == cold or cur_sizes[cold] <= 1:
            break
        cur_sizes[hot] += 1
        cur_sizes[cold] -= 1
        res = ev.segment_eval(SegmentPlan(ranges, tuple(cur_sizes), parts, streaming), m)
        evals += 1
        if not res.feasible or res.latency >= best[1]:
            break
        cur_times = res.cluster_times
        best = (tuple(cur_sizes), res.latency, cur_times)
    return best[0], best[1], best[2], evals


def rebalance_regions(
    clusters: tuple[Range, ...],
    partitions: tuple[Partition, ...],
    initial_sizes: tuple[int, ...],
    net: Network,
    hw: HardwareConfig,
    m: int,
) -> tuple[tuple[int, ...], float]:
    """Public entry point for the region-refinement loop (non-streaming)."""
    ev = Evaluator(net, hw)
    streaming = (False,) * len(clusters)
    sizes, latency, _, _ = _rebalance(ev, tuple(clusters), tuple(initial_sizes), tuple(partitions), streaming, m)
    return sizes, latency


# ---------------------------------------------------------------------------
# Per-segment search


@dataclass(frozen=True)
class SegmentSearchResult:
    segment: Range
    ranges: tuple[Range, ...]
    sizes: tuple[int, ...]
    parts: tuple[Partition, ...]
    streaming: bool
    latency: float
    trace: tuple[tuple[int, int, float], ...]
    evaluations: int


def _partition_vector(
    net: Network, segment: Range, idx: int, streaming: bool
) -> tuple[Partition, ...]:
    start, end = segment
    parts = []
    for pos, li in enumerate(range(start, end)):
        if streaming or net.layers[li].kind is LayerKind.FC:
            parts.append(Partition.ISP)
        else:
            parts.append(Partition.WSP if pos < idx else Partition.ISP)
    return tuple(parts)


def search_segment(
    segment: Range,
    net: Network,
    hw: HardwareConfig,
    m: int,
    cluster_counts=None,
    streaming: bool = False,
    evaluator: Evaluator | None = None,
) -> SegmentSearchResult:
    """Grid search over (WSP-to-ISP transition point) x (cluster count), with
    proportional allocation and rebalancing per candidate.

    The argmin uses (latency, idx, N) lexicographic order so concurrent or
    reordered candidate evaluation cannot change the winner.
    """
    ev = evaluator or Evaluator(net, hw)
    start, end = segment
    length = end - start
    cmt = gen_cmt(segment, net)
    counts = list(cluster_counts) if cluster_counts is not None else list(range(1, length + 1))
    best_key = None
    best = None
    trace = []
    evals = 0
    for idx in range(length + 1):
        parts = _partition_vector(net, segment, idx, streaming)
        for n in counts:
            if n > hw.num_chiplets:
                continue
            ranges = cmt[n]
            stream_vec = (streaming,) * n
            sizes0 = proportional_allocate(ranges, net, hw.num_chiplets)
            sizes0 = _ensure_capacity(ev, ranges, sizes0, parts, stream_vec)
            if sizes0 is None:
                trace.append((n, idx, inf))
                continue
            sizes, lat, _, ne = _rebalance(ev, ranges, sizes0, parts, stream_vec, m)
            evals += ne
            trace.append((n, idx, lat))
            key = (lat, idx, n)
            if best_key is None or key < best_key:
                best_key = key
                best = (ranges, sizes, parts)
    if best is None or best_key[0] == inf:
        raise NoFeasibleScheduleError(
            f"no weight-feasible configuration for layers [{start},{end}) "
            f"on {hw.num_chiplets} chiplets"
        )
    return SegmentSearchResult(
        segment=segment,
        ranges=best[0],
        sizes=best[1],
        parts=best[2],
        streaming=streaming,
        latency=best_key[0],
        trace=tuple(trace),
        evaluations=evals,
    )


# ---------------------------------------------------------------------------
# Segment division


@dataclass(frozen=True)
class SegmentSpec:
    start: int
    end: int
    streaming: bool = False


def divide_segments(net: Network, hw: HardwareConfig, allow_streaming: bool = True) -> tuple[SegmentSpec, ...]:
    """Greedy minimal segmentation shared by the merged and segmented schemes.

    A segment grows while (a) its weights, tiled across the whole package, fit
    the per-chiplet buffers, (b) it has no more layers than chiplets, and
    (c) every layer can still get a region large enough to hold its own tiles
    -- (b) and (c) are what the one-region-per-layer segmented scheme needs.
    A layer whose package-wide tile alone exceeds capacity cannot be resident
    at all: it becomes its own DRAM-streaming segment, or an error when
    streaming is disallowed.
    """
    cap = hw.chiplet_weight_capacity
    c = hw.num_chiplets
    segments: list[SegmentSpec] = []
    cur_start = None
    cur_tiles = 0
    cur_regions = 0
    for li, layer in enumerate(net.layers):
        w = layer_stats(layer).weight_elems * hw.wgt_bytes
        tile = -(-w // c)
        min_region = -(-w // cap)
        if tile > cap:
            if not allow_streaming:
                raise LayerTooLargeError(
                    f"layer {li} ({layer.name!r}) needs {tile} weight bytes per chiplet, "
                    f"package capacity is {cap} per chiplet"
                )
            if cur_start is not None:
                segments.append(SegmentSpec(cur_start, li))
                cur_start = None
            segments.append(SegmentSpec(li, li + 1, streaming=True))
            continue
        if cur_start is None:
            cur_start, cur_tiles, cur_regions = li, tile, min_region
        elif (
            li - cur_start < c
            and cur_tiles + tile <= cap
            and cur_regions + min_region <= c
        ):
            cur_tiles += tile
            cur_regions += min_region
        else:
            segments.append(SegmentSpec(cur_start, li))
            cur_start, cur_tiles, cur_regions = li, tile, min_region
    if cur_start is not None:
        segments.append(SegmentSpec(cur_start, len(net)))
    return tuple(segments)


# ---------------------------------------------------------------------------
# Whole-network schedulers


@dataclass(frozen=True)
class SearchResult:
    schedule: Schedule
    report: CostReport
    candidates_evaluated: int
    trace: tuple[tuple[int, int, float], ...]
    method: str


def _assemble(
    outcomes: list[SegmentSearchResult], net: Network, hw: HardwareConfig, m: int, method: str
) -> SearchResult:
    mesh = Mesh(hw.mesh_rows, hw.mesh_cols)
    segments = []
    for out in outcomes:
        placements = zigzag_place(out.sizes, mesh)
        seg_start = out.segment[0]
        clusters = tuple(
            ClusterAssignment(
                start=s,
                end=e,
                region_size=out.sizes[j],
                placement=placements[j],
                partitions=out.parts[s - seg_start:e - seg_start],
                streaming=out.streaming,
            )
            for j, (s, e) in enumerate(out.ranges)
        )
        segments.append(SegmentAssignment(clusters))
    schedule = Schedule(tuple(segments))
    report = evaluate(schedule, net, hw, m)
    return SearchResult(
        schedule=schedule,
        report=report,
        candidates_evaluated=sum(o.evaluations for o in outcomes),
        trace=tuple(t for o in outcomes for t in o.trace),
        method=method,
    )


def schedule_scope(net: Network, hw: HardwareConfig, m: int) -> SearchResult:
    """Merged-pipeline schedule: divide into segments, then run the full
    cluster/region/partition search per segment."""
    ev = Evaluator(net, hw)
    outcomes = [
        search_segment((s.start, s.end), net, hw, m, streaming=s.streaming, evaluator=ev)
        for s in divide_segments(net, hw)
    ]
    return _assemble(outcomes, net, hw, m, "scope")


def _schedule_sequential(net: Network, hw: HardwareConfig, m: int) -> SearchResult:
    ev = Evaluator(net, hw)
    c = hw.num_chiplets
    cap = hw.chiplet_weight_capacity
    outcomes = []
    evals = 0
    for li, layer in enumerate(net.layers):
        w = layer_stats(layer).weight_elems * hw.wgt_bytes
        stream = -(-w // c) > cap
        best = None
        for p in (Partition.ISP, Partition.WSP):
            if p is Partition.WSP and (layer.kind is LayerKind.FC or stream):
                continue
            res = ev.segment_eval(
                SegmentPlan(((li, li + 1),), (c,), (p,), (stream,)), m
            )
            evals += 1
            if not res.feasible or res.latency == inf:
                continue
            if best is None or res.latency < best[0]:
                best = (res.latency, p)
        if best is None:
            raise NoFeasibleScheduleError(
                f"layer {li} ({layer.name!r}) has no feasible partition on the full package"
            )
        outcomes.append(
            SegmentSearchResult(
                segment=(li, li + 1),
                ranges=((li, li + 1),),
                sizes=(c,),
                parts=(best[1],),
                streaming=stream,
                latency=best[0],
                trace=((1, 0, best[0]),),
                evaluations=0,
            )
        )
    result = _assemble(outcomes, net, hw, m, "sequential")
    return SearchResult(
        result.schedule, result.report, evals, result.trace, result.method
    )


def _schedule_full_pipeline(net: Network, hw: HardwareConfig, m: int) -> SearchResult:
    length = len(net)
    c = hw.num_chiplets
    cap = hw.chiplet_weight_capacity
    problems = []
    if length > c:
        problems.append(f"{length} single-layer pipeline stages exceed {c} chiplets")
    weights = [layer_stats(l).weight_elems * hw.wgt_bytes for l in net.layers]
    # Any allocation leaves some chiplet holding at least sum(w)/C resident
    # bytes, and every layer's region needs ceil(w/cap) chiplets for its tiles.
    if sum(weights) > cap * c or sum(-(-w // cap) for w in weights) > c:
        problems.append(
            f"weight buffer overflow: {sum(weights)} resident weight bytes exceed "
            f"package capacity {cap * c}"
        )
    if problems:
        raise NoFeasibleScheduleError(
            "full pipeline is infeasible: " + "; ".join(problems)
        )
    try:
        out = search_segment((0, length), net, hw, m, cluster_counts=[length])
    except NoFeasibleScheduleError:
        raise NoFeasibleScheduleError(
            "full pipeline is infeasible: weight buffer overflow in every "
            "region allocation"
        ) from None
    return _assemble([out], net, hw, m, "full_pipeline")


def _schedule_segmented(net: Network, hw: HardwareConfig, m: int) -> SearchResult:
    ev = Evaluator(net, hw)
    outcomes = []
    for s in divide_segments(net, hw):
        outcomes.append(
            search_segment(
                (s.start, s.end), net, hw, m,
                cluster_counts=[s.end - s.start],
                streaming=s.streaming,
                evaluator=ev,
            )
        )
    return _assemble(outcomes, net, hw, m, "segmented")


def schedule_baseline(kind: BaselineKind, net: Network, hw: HardwareConfig, m: int) -> SearchResult:
    """Reference schedulers: fully sequential (one layer at a time on the whole
    package), full pipeline (one segment, one region per layer), and segmented
    pipeline (shared segmentation, singleton clusters)."""
    if kind is BaselineKind.SEQUENTIAL:
        return _schedule_sequential(net, hw, m)
    if kind is BaselineKind.FULL_PIPELINE:
        return _schedule_full_pipeline(net, hw, m)
    if kind is BaselineKind.SEGMENTED:
        return _schedule_segmented(net, hw, m)
    raise ValueError(f"unknown baseline kind {kind!r}")


# ---------------------------------------------------------------------------
# Search-space size and the exhaustive oracle


def cluster_region_configs(length: int, num_chiplets: int, n_clusters: int) -> int:
    """Ways to divide ``length`` layers and ``num_chiplets`` chiplets into
    ``n_clusters`` contiguous/positive parts."""
    return comb(length - 1, n_clusters - 1) * comb(num_chiplets - 1, n_clusters - 1)


def design_space_size(length: int, num_chiplets: int) -> int:
    """Exact size of the full (division x allocation x partition) space."""
    if length < 1 or num_chiplets < 1:
        raise ValueError("length and num_chiplets must be >= 1")
    total = sum(
        cluster_region_configs(length, num_chiplets, n)
        for n in range(1, min(length, num_chiplets) + 1)
    )
    return (2 ** length) * total


def _compositions(total: int, parts: int):
    """Positive integer compositions, lexicographic by cut positions."""
    for cuts in combinations(range(1, total), parts - 1):
        prev = 0
        out = []
        for cut in cuts:
            out.append(cut - prev)
            prev = cut
        out.append(total - prev)
        yield tuple(out)


@dataclass(frozen=True)
class ExhaustiveResult:
    best_id: int
    best_latency: float
    best_plan: SegmentPlan | None
    distribution: tuple[tuple[int, float | None, bool], ...]
    candidates_total: int
    candidates_feasible: int


def exhaustive_search(
    segment: Range,
    net: Network,
    hw: HardwareConfig,
    m: int,
    max_candidates: int = 10_000_000,
) -> ExhaustiveResult:
    """Enumerate and evaluate every (division, allocation, partition) of one
    segment.  Candidates that force WSP onto an fc layer, split beyond a
    layer's rows, or overflow the weight buffers are recorded as infeasible.
    """
    start, end = segment
    length = end - start
    c = hw.num_chiplets
    size = design_space_size(length, c)
    if size > max_candidates:
        raise SearchSpaceTooLargeError(
            f"search space has {size} candidates, limit is {max_candidates}", size
        )
    ev = Evaluator(net, hw)
    fc_positions = [
        pos for pos, li in enumerate(range(start, end))
        if net.layers[li].kind is LayerKind.FC
    ]
    masks = []
    for mask in range(2 ** length):
        parts = tuple(
            Partition.WSP if mask >> pos & 1 else Partition.ISP for pos in range(length)
        )
        valid = not any(mask >> pos & 1 for pos in fc_positions)
        masks.append((parts, valid))
    rows: list[tuple[int, float | None, bool]] = []
    best_id, best_lat, best_plan = -1, inf, None
    cand = 0
    for n in range(1, min(length, c) + 1):
        for cuts in combinations(range(start + 1, end), n - 1):
            bounds = (start,) + cuts + (end,)
            ranges = tuple((bounds[i], bounds[i + 1]) for i in range(n))
            for sizes in _compositions(c, n):
                streaming = (False,) * n
                for parts, valid in masks:
                    if not valid:
                        rows.append((cand, None, False))
                        cand += 1
                        continue
                    res = ev.segment_eval(SegmentPlan(ranges, sizes, parts, streaming), m)
                    if res.feasible and res.latency < inf:
                        rows.append((cand, res.latency, True))
                        if res.latency < best_lat:
                            best_id, best_lat = cand, res.latency
                            best_plan = SegmentPlan(ranges, sizes, parts, streaming)
                    else:
                        rows.append((cand, None, False))
                    cand += 1
    feasible = sum(1 for _, _, ok in rows if ok)
    return ExhaustiveResult(
        best_id=best_id,
        best_latency=best_lat,
        best_plan=best_plan,
        distribution=tuple(rows),
        candidates_total=cand,
        candidates_feasible=feasible,
    )


def percentile_rank(distribution, value: float) -> float:
    """Percent of feasible candidates strictly faster than ``value``."""
    feas = [lat for _, lat, ok in distribution if ok]
    if not feas:
        raise NoFeasibleScheduleError("no feasible candidates in the distribution")
    better = sum(1 for lat in feas if lat < value)
    return 100.0 * better / len(feas)

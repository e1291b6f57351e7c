"""Analytic latency/energy/footprint model.

Per-layer execution has three phases: preparation (weight staging and, for a
segment's first layer, activation staging), computation, and inter-chiplet
communication.  Computation and communication overlap, so a layer costs
``t_pre + max(t_comm, t_comp)``.  Cluster latency is the sum over its layers;
a segment of N pipelined clusters processing m samples costs
``(m + N - 1) * max(cluster latencies)`` plus a one-time DRAM deployment of
its resident weights; the system total is the sum over segments.

The compute, weight-staging, and communication functions are deterministic
closed-form surrogates for simulator-derived cost models; they preserve the
qualitative dependences (per-chiplet work scales with region size, ISP eats
into the parallelizable channel dimension, WSP pays halo exchange and either
replication footprint or per-sample tile all-gather).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf

from .errors import (
    InfeasibleScheduleError,
    InvalidSplitError,
    InvariantError,
    UnsupportedPartitionError,
)
from .model import (
    HardwareConfig,
    LayerDesc,
    LayerKind,
    Network,
    Partition,
    Schedule,
    SegmentAssignment,
    halo_elems,
    layer_stats,
)
from .placement import Mesh, boundary_width, consecutive_boundaries, zigzag_place

Coord = tuple[int, int]


# ---------------------------------------------------------------------------
# Per-phase surrogates


def compute_time(layer: LayerDesc, p: Partition, n: int, hw: HardwareConfig) -> float:
    """Computation time of ``layer`` split over a region of ``n`` chiplets.

    A chiplet retires ``lanes_per_chiplet`` output channels per cycle, each
    lane reducing ``macs_per_lane`` of the input patch per cycle.  ISP divides
    the output channels (the ceil captures its utilization loss on narrow
    layers); WSP divides the output rows.
    """
    if n < 1:
        raise InvalidSplitError("region size must be >= 1")
    lanes = hw.lanes_per_chiplet
    red = hw.macs_per_lane
    if p is Partition.ISP:
        c_out_part = -(-layer.c_out // n)
        spatial = layer.h_out * layer.w_out
    else:
        if layer.kind is LayerKind.FC:
            raise UnsupportedPartitionError(
                f"layer {layer.name!r}: fc layers cannot use WSP"
            )
        if n > layer.h_out:
            raise InvalidSplitError(
                f"layer {layer.name!r}: WSP over {n} chiplets exceeds {layer.h_out} output rows"
            )
        c_out_part = layer.c_out
        spatial = (-(-layer.h_out // n)) * layer.w_out
    patch = layer.c_in * layer.k_h * layer.k_w
    cycles = (-(-c_out_part // lanes)) * spatial * (-(-patch // red))
    return cycles / hw.clock_hz


def comm_volume(
    this_layer: LayerDesc,
    this_part: Partition,
    region_size: int,
    next_layer: LayerDesc,
    next_part: Partition,
    next_region_size: int,
    same_region: bool,
    hw: HardwareConfig,
) -> int:
    """Bytes moved between chiplets to hand ``this_layer``'s output to
    ``next_layer``, for consumers in the same region (same cluster) or in the
    next region (next pipeline stage).
    """
    out = layer_stats(this_layer).out_elems * hw.act_bytes
    if same_region:
        r = region_size
        if next_part is Partition.WSP:
            halo = halo_elems(next_layer, r) * hw.act_bytes
            if this_part is Partition.WSP:
                return halo
            return (r - 1) * out + halo
        return (r - 1) * out
    if next_part is Partition.WSP:
        return out
    return next_region_size * out


def comm_time(
    volume: int,
    src_region: tuple[Coord, ...],
    dst_region: tuple[Coord, ...],
    hw: HardwareConfig,
    mesh: Mesh,
) -> float:
    """Transfer time under the endpoint-bandwidth model.

    Within a region all member chiplets exchange in parallel; across regions
    the effective parallelism is capped by the smaller endpoint and by the
    number of mesh links crossing the region boundary.
    """
    if volume < 0:
        raise InvariantError("volume must be >= 0")
    if set(src_region) == set(dst_region):
        return volume / (len(src_region) * hw.nop_bw_per_chiplet)
    links = min(
        len(src_region),
        len(dst_region),
        max(boundary_width(src_region, dst_region), 1),
    )
    return volume / (links * hw.nop_bw_per_chiplet)


def prep_time(
    layer: LayerDesc,
    p: Partition,
    n: int,
    hw: HardwareConfig,
    first_deployment: bool = False,
    replicated: bool = False,
) -> float:
    """Weight-staging time for one execution of ``layer`` on ``n`` chiplets.

    The DRAM load of the full weight volume is charged once per segment
    deployment.  Steady state, ISP tiles stay resident (0); a WSP layer under
    distributed buffering all-gathers the missing ``(n-1)/n`` of its weights
    from peer chiplets before computing, unless the region holds full replicas.
    """
    w = layer_stats(layer).weight_elems * hw.wgt_bytes
    t = w / hw.dram_bw_total if first_deployment else 0.0
    if p is Partition.WSP and n > 1 and not replicated:
        t += w * (n - 1) / (n * hw.nop_bw_per_chiplet)
    return t


@dataclass(frozen=True)
class PhaseTimes:
    t_pre: float
    t_comp: float
    t_comm: float
    t_layer: float

    @classmethod
    def build(cls, t_pre: float, t_comp: float, t_comm: float) -> "PhaseTimes":
        return cls(t_pre, t_comp, t_comm, t_pre + max(t_comm, t_comp))


def layer_latency(
    layer: LayerDesc,
    p: Partition,
    n: int,
    hw: HardwareConfig,
    t_comm: float = 0.0,
    first_deployment: bool = False,
    replicated: bool = False,
    extra_pre: float = 0.0,
) -> PhaseTimes:
    """Compose the three phases into the layer's pipeline occupancy."""
    t_pre = prep_time(layer, p, n, hw, first_deployment, replicated) + extra_pre
    t_comp = compute_time(layer, p, n, hw)
    return PhaseTimes.build(t_pre, t_comp, t_comm)


def pipeline_time(cluster_times, m: int) -> float:
    """Makespan of m samples through stage-matched pipelined clusters."""
    times = list(cluster_times)
    if m < 1:
        raise InvariantError("m must be >= 1")
    if not times:
        return 0.0
    return (m + len(times) - 1) * max(times)


# ---------------------------------------------------------------------------
# Weight footprint


def _tile(w: int, n: int) -> int:
    return -(-w // n)


@dataclass(frozen=True)
class RegionFootprint:
    """Per-chiplet weight bytes for one region.

    ``resident``/``transient`` describe distributed buffering (1/n tiles, plus
    the largest full WSP copy materialized during that layer's turn).  When the
    region is small enough to keep WSP weights fully ``replicated`` instead,
    ``peak`` is that replicated residency and no per-sample gather is needed.
    """

    resident: int
    transient: int
    peak: int
    replicated: bool
    streaming: bool
    feasible: bool


@dataclass(frozen=True)
class FootprintReport:
    regions: tuple[RegionFootprint, ...]
    peak: int
    feasible: bool


def _region_footprint(
    weights: list[int], parts: list[Partition], n: int, streaming: bool, cap: int
) -> RegionFootprint:
    if streaming:
        return RegionFootprint(0, 0, 0, False, True, True)
    tiles = [_tile(w, n) for w in weights]
    resident = sum(tiles)
    extra = max(
        (w - t for w, t, p in zip(weights, tiles, parts) if p is Partition.WSP),
        default=0,
    )
    transient = resident + extra
    resident_repl = sum(
        w if p is Partition.WSP else t for w, t, p in zip(weights, tiles, parts)
    )
    replicated = resident_repl <= cap
    peak = resident_repl if replicated else transient
    # transient <= resident_repl always, so feasibility reduces to the
    # distributed transient fitting the buffers.
    return RegionFootprint(resident, transient, peak, replicated, False, transient <= cap)


def weight_footprint(
    segment: SegmentAssignment, net: Network, hw: HardwareConfig
) -> FootprintReport:
    """Per-chiplet weight bytes for each region of ``segment`` and whether the
    assignment fits the PE weight buffers.

    Every layer keeps a 1/n tile resident on each of its region's n chiplets;
    a WSP layer additionally materializes the full weight copy while it
    computes (all-gathered from the peer tiles), unless the whole cluster fits
    fully replicated, in which case replicas stay resident and no per-sample
    gather is needed.
    """
    cap = hw.chiplet_weight_capacity
    regions = []
    for cl in segment.clusters:
        weights = [
            layer_stats(net.layers[li]).weight_elems * hw.wgt_bytes
            for li in range(cl.start, cl.end)
        ]
        regions.append(
            _region_footprint(weights, list(cl.partitions), cl.region_size, cl.streaming, cap)
        )
    peak = max((r.peak for r in regions), default=0)
    return FootprintReport(tuple(regions), peak, all(r.feasible for r in regions))


# ---------------------------------------------------------------------------
# Report structure


@dataclass(frozen=True)
class LayerCost:
    layer: int
    name: str
    t_pre: float
    t_comp: float
    t_comm: float
    t_layer: float


@dataclass(frozen=True)
class ClusterCost:
    t_cluster: float
    region_size: int
    streaming: bool
    layers: tuple[LayerCost, ...]


@dataclass(frozen=True)
class SegmentCost:
    t_segment: float
    t_deploy: float
    t_pipeline: float
    clusters: tuple[ClusterCost, ...]


@dataclass(frozen=True)
class EnergyBreakdown:
    e_mac: float
    e_nop: float
    e_dram: float

    @property
    def total(self) -> float:
        return self.e_mac + self.e_nop + self.e_dram


@dataclass(frozen=True)
class CostReport:
    t_system: float
    m_samples: int
    energy: EnergyBreakdown
    peak_weight_footprint: int
    utilization: float
    segments: tuple[SegmentCost, ...]

    def verify(self) -> None:
        """Recompute the latency identities bottom-up and fail on mismatch."""
        total = 0.0
        for si, seg in enumerate(self.segments):
            for ci, cl in enumerate(seg.clusters):
                acc = 0.0
                for lc in cl.layers:
                    if lc.t_layer != lc.t_pre + max(lc.t_comm, lc.t_comp):
                        raise InvariantError(
                            f"layer {lc.layer}: t_layer != t_pre + max(t_comm, t_comp)"
                        )
                    acc += lc.t_layer
                if cl.t_cluster != acc:
                    raise InvariantError(f"segment {si} cluster {ci}: t_cluster != sum of layers")
            expect = pipeline_time([c.t_cluster for c in seg.clusters], self.m_samples)
            if seg.t_pipeline != expect:
                raise InvariantError(f"segment {si}: pipeline time mismatch")
            if seg.t_segment != seg.t_deploy + seg.t_pipeline:
                raise InvariantError(f"segment {si}: t_segment != t_deploy + t_pipeline")
            total += seg.t_segment
        if self.t_system != total:
            raise InvariantError("t_system != sum of segment times")

    def to_dict(self) -> dict:
        return {
            "t_system": self.t_system,
            "m_samples": self.m_samples,
            "energy": {
                "e_mac": self.energy.e_mac,
                "e_nop": self.energy.e_nop,
                "e_dram": self.energy.e_dram,
                "total": self.energy.total,
            },
            "peak_weight_footprint": self.peak_weight_footprint,
            "utilization": self.utilization,
            "segments": [
                {
                    "t_segment": seg.t_segment,
                    "t_deploy": seg.t_deploy,
                    "t_pipeline": seg.t_pipeline,
                    "clusters": [
                        {
                            "t_cluster": cl.t_cluster,
                            "region_size": cl.region_size,
                            "streaming": cl.streaming,
                            "layers": [
                                {
                                    "layer": lc.layer,
                                    "name": lc.name,
                                    "t_pre": lc.t_pre,
                                    "t_comp": lc.t_comp,
                                    "t_comm": lc.t_comm,
                                    "t_layer": lc.t_layer,
                                }
                                for lc in cl.layers
                            ],
                        }
                        for cl in seg.clusters
                    ],
                }
                for seg in self.segments
            ],
        }


# ---------------------------------------------------------------------------
# Evaluator


@dataclass(frozen=True)
class SegmentPlan:
    """Plain per-segment description used by the search hot path.

    ``parts`` is flat over the segment's layers; ``placements`` of None means
    zigzag placement of ``sizes``.
    """

    ranges: tuple[tuple[int, int], ...]
    sizes: tuple[int, ...]
    parts: tuple[Partition, ...]
    streaming: tuple[bool, ...]
    placements: tuple[tuple[Coord, ...], ...] | None = None


@dataclass
class _SegmentEval:
    latency: float
    t_deploy: float
    t_pipeline: float
    cluster_times: list[float]
    feasible: bool
    fail_reason: str | None
    nop_bytes_per_sample: int
    deploy_bytes: int
    stream_bytes_per_sample: int
    detail: list[list[LayerCost]] | None
    footprints: list[RegionFootprint]


class Evaluator:
    """Caching evaluator for one (network, hardware) pair.

    Pure with respect to its inputs; the internal memo tables only ever hold
    values of pure functions, so instances may be shared across threads.
    """

    def __init__(self, net: Network, hw: HardwareConfig):
        self.net = net
        self.hw = hw
        self.mesh = Mesh(hw.mesh_rows, hw.mesh_cols)
        self.cap = hw.chiplet_weight_capacity
        stats = [layer_stats(l) for l in net.layers]
        self.macs = [s.macs for s in stats]
        self.out_bytes = [s.out_elems * hw.act_bytes for s in stats]
        self.w_bytes = [s.weight_elems * hw.wgt_bytes for s in stats]
        self.in_bytes0 = stats[0].in_elems * hw.act_bytes
        self.total_macs = sum(self.macs)
        self._comp: dict[tuple[int, Partition, int], float | None] = {}
        self._halo: dict[tuple[int, int], int] = {}

    # -- cached primitives -------------------------------------------------

    def compute_time(self, li: int, p: Partition, n: int) -> float:
        """compute_time with an (invalid-split aware) memo; None means invalid."""
        key = (li, p, n)
        try:
            t = self._comp[key]
        except KeyError:
            try:
                t = compute_time(self.net.layers[li], p, n, self.hw)
            except (InvalidSplitError, UnsupportedPartitionError):
                t = None
            self._comp[key] = t
        if t is None:
            raise InvalidSplitError(
                f"layer {li} cannot use {p.value} over {n} chiplets"
            )
        return t

    def halo_bytes(self, li: int, parts: int) -> int:
        key = (li, parts)
        v = self._halo.get(key)
        if v is None:
            v = halo_elems(self.net.layers[li], parts) * self.hw.act_bytes
            self._halo[key] = v
        return v

    def incoming_bytes(self, seg_start: int) -> int:
        """Activation bytes staged into a segment's first region: the network
        input for the first segment, else the previous segment's output."""
        if seg_start == 0:
            return self.in_bytes0
        return self.out_bytes[seg_start - 1]

    # -- segment evaluation -------------------------------------------------

    def segment_eval(self, plan: SegmentPlan, m: int, collect: bool = False) -> _SegmentEval:
        hw = self.hw
        nop_bw = hw.nop_bw_per_chiplet
        ranges, sizes, parts, streaming = plan.ranges, plan.sizes, plan.parts, plan.streaming
        seg_start = ranges[0][0]
        ncl = len(ranges)
        if plan.placements is None:
            bwidths = consecutive_boundaries(sizes, self.mesh)
        else:
            bwidths = tuple(
                boundary_width(plan.placements[j], plan.placements[j + 1])
                for j in range(ncl - 1)
            )

        cluster_times: list[float] = []
        detail: list[list[LayerCost]] | None = [] if collect else None
        footprints: list[RegionFootprint] = []
        nop_bytes = 0
        deploy_bytes = 0
        stream_bytes = 0
        feasible = True
        fail_reason: str | None = None

        for j in range(ncl):
            start, end = ranges[j]
            n = sizes[j]
            stream = streaming[j]
            weights = [self.w_bytes[li] for li in range(start, end)]
            cparts = [parts[li - seg_start] for li in range(start, end)]
            foot = _region_footprint(weights, cparts, n, stream, self.cap)
            footprints.append(foot)
            if not foot.feasible and feasible:
                feasible = False
                coord = (
                    plan.placements[j][0]
                    if plan.placements is not None
                    else zigzag_place(sizes, self.mesh)[j][0]
                )
                fail_reason = (
                    f"chiplet {coord} needs {foot.transient} weight bytes, "
                    f"capacity is {self.cap}"
                )
            t_cluster = 0.0
            rows: list[LayerCost] | None = [] if collect else None
            for li in range(start, end):
                p = cparts[li - start]
                try:
                    t_comp = self.compute_time(li, p, n)
                except InvalidSplitError as exc:
                    if collect:
                        raise
                    return _SegmentEval(
                        inf, 0.0, inf, [], False, str(exc), 0, 0, 0, None, footprints
                    )
                w = self.w_bytes[li]
                t_pre = 0.0
                if stream:
                    fetch = w * (n if p is Partition.WSP else 1)
                    t_pre += fetch / hw.dram_bw_total
                    stream_bytes += fetch
                else:
                    deploy_bytes += w
                    if p is Partition.WSP and n > 1 and not foot.replicated:
                        t_pre += w * (n - 1) / (n * nop_bw)
                        nop_bytes += w * (n - 1)
                if li == seg_start:
                    inc = self.incoming_bytes(seg_start)
                    vol_in = n * inc if p is Partition.ISP else inc
                    t_pre += vol_in / (n * nop_bw)
                    nop_bytes += vol_in
                t_comm = 0.0
                if li < end - 1:
                    p_next = cparts[li + 1 - start]
                    vol = self._case1_volume(li, p, p_next, n)
                    t_comm = vol / (n * nop_bw)
                    nop_bytes += vol
                elif j < ncl - 1:
                    p_next = parts[ranges[j + 1][0] - seg_start]
                    n_next = sizes[j + 1]
                    out = self.out_bytes[li]
                    vol = n_next * out if p_next is Partition.ISP else out
                    links = min(n, n_next, max(bwidths[j], 1))
                    t_comm = vol / (links * nop_bw)
                    nop_bytes += vol
                t_layer = t_pre + max(t_comm, t_comp)
                t_cluster += t_layer
                if rows is not None:
                    rows.append(
                        LayerCost(li, self.net.layers[li].name, t_pre, t_comp, t_comm, t_layer)
                    )
            cluster_times.append(t_cluster)
            if detail is not None:
                detail.append(rows)

        t_pipeline = (m + ncl - 1) * max(cluster_times)
        t_deploy = deploy_bytes / hw.dram_bw_total
        return _SegmentEval(
            t_deploy + t_pipeline, t_deploy, t_pipeline, cluster_times, feasible,
            fail_reason, nop_bytes, deploy_bytes, stream_bytes, detail, footprints,
        )

    def _case1_volume(self, li: int, p: Partition, p_next: Partition, n: int) -> int:
        out = self.out_bytes[li]
        if p_next is Partition.WSP:
            halo = self.halo_bytes(li + 1, n)
            return halo if p is Partition.WSP else (n - 1) * out + halo
        return (n - 1) * out


def _plan_from_segment(seg: SegmentAssignment) -> SegmentPlan:
    return SegmentPlan(
        ranges=tuple((cl.start, cl.end) for cl in seg.clusters),
        sizes=tuple(cl.region_size for cl in seg.clusters),
        parts=tuple(p for cl in seg.clusters for p in cl.partitions),
        streaming=tuple(cl.streaming for cl in seg.clusters),
        placements=tuple(cl.placement for cl in seg.clusters),
    )


def evaluate(schedule: Schedule, net: Network, hw: HardwareConfig, m: int) -> CostReport:
    """Full cost report for a validated schedule processing ``m`` samples."""
    if m < 1:
        raise InvariantError("m must be >= 1")
    schedule.validate(net, hw)
    ev = Evaluator(net, hw)
    t_system = 0.0
    nop_bytes = 0
    deploy_bytes = 0
    stream_bytes = 0
    peak = 0
    segments: list[SegmentCost] = []
    for seg in schedule.segments:
        res = ev.segment_eval(_plan_from_segment(seg), m, collect=True)
        if not res.feasible:
            raise InfeasibleScheduleError(res.fail_reason or "over-capacity region")
        clusters = []
        for j, cl in enumerate(seg.clusters):
            clusters.append(
                ClusterCost(
                    t_cluster=res.cluster_times[j],
                    region_size=cl.region_size,
                    streaming=cl.streaming,
                    layers=tuple(res.detail[j]),
                )
            )
        segments.append(
            SegmentCost(res.latency, res.t_deploy, res.t_pipeline, tuple(clusters))
        )
        t_system += res.latency
        nop_bytes += res.nop_bytes_per_sample
        deploy_bytes += res.deploy_bytes
        stream_bytes += res.stream_bytes_per_sample
        peak = max(peak, max((f.peak for f in res.footprints), default=0))
    energy = EnergyBreakdown(
        e_mac=hw.e_mac * ev.total_macs * m,
        e_nop=hw.e_nop_bit * 8 * nop_bytes * m,
        e_dram=hw.e_dram_bit * 8 * (deploy_bytes + stream_bytes * m),
    )
    util = ev.total_macs * m / (hw.peak_macs_per_s * t_system) if t_system > 0 else 0.0
    return CostReport(
        t_system=t_system,
        m_samples=m,
        energy=energy,
        peak_weight_footprint=peak,
        utilization=util,
        segments=tuple(segments),
    )

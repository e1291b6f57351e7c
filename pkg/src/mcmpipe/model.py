"""Domain types: layers, networks, hardware, partitions, and schedules.

All types are immutable after construction; every operation here is a pure
function, so they are safe to share across concurrent evaluation workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from .errors import (
    InvalidLayerError,
    InvariantError,
    UnsupportedPartitionError,
)


class LayerKind(enum.Enum):
    CONV = "conv"
    FC = "fc"


class Partition(enum.Enum):
    """Intra-layer partitioning scheme for one layer on its region.

    ISP replicates inputs and splits weights by output channel; WSP splits the
    input spatially (1-D along output height) and replicates weights.  Fully
    connected layers have no spatial dimension to divide and must use ISP.
    """

    ISP = "isp"
    WSP = "wsp"


@dataclass(frozen=True)
class LayerDesc:
    """Shape descriptor for one weight layer (conv or fully connected).

    ``pool`` is the downsampling factor of a pooling op folded into this layer:
    the emitted activation has spatial dims ``h_out // pool`` x ``w_out // pool``
    (floor division, which matches 2x2/2 and overlapping 3x3/2 pools for the
    standard image sizes).  Pooling adds no MACs.
    """

    kind: LayerKind
    c_in: int
    c_out: int
    h_in: int = 1
    w_in: int = 1
    k_h: int = 1
    k_w: int = 1
    stride: int = 1
    padding: int = 0
    pool: int = 1
    name: str = ""

    def __post_init__(self):
        for f in ("c_in", "c_out", "h_in", "w_in", "k_h", "k_w", "stride", "pool"):
            if getattr(self, f) < 1:
                raise InvalidLayerError(f"layer {self.name!r}: {f} must be >= 1")
        if self.padding < 0:
            raise InvalidLayerError(f"layer {self.name!r}: padding must be >= 0")
        if self.kind is LayerKind.FC:
            if (self.h_in, self.w_in, self.k_h, self.k_w, self.stride, self.padding, self.pool) != (1, 1, 1, 1, 1, 0, 1):
                raise InvalidLayerError(
                    f"layer {self.name!r}: fc layers must have unit spatial/kernel fields"
                )
        if self.h_out < 1 or self.w_out < 1:
            raise InvalidLayerError(
                f"layer {self.name!r}: kernel {self.k_h}x{self.k_w} does not fit input "
                f"{self.h_in}x{self.w_in} with stride {self.stride}, padding {self.padding}"
            )

    @property
    def h_out(self) -> int:
        return (self.h_in + 2 * self.padding - self.k_h) // self.stride + 1

    @property
    def w_out(self) -> int:
        return (self.w_in + 2 * self.padding - self.k_w) // self.stride + 1

    @property
    def out_h(self) -> int:
        """Emitted activation height after the folded pool."""
        return max(1, self.h_out // self.pool)

    @property
    def out_w(self) -> int:
        return max(1, self.w_out // self.pool)


@dataclass(frozen=True)
class LayerStats:
    macs: int
    weight_elems: int
    in_elems: int
    out_elems: int


@lru_cache(maxsize=None)
def layer_stats(layer: LayerDesc) -> LayerStats:
    """Exact operand counts for one layer.

    Conv MACs count every pre-pool output position (the folded pool is free);
    ``out_elems`` counts the activation actually emitted downstream, i.e. the
    post-pool tensor.
    """
    if layer.kind is LayerKind.FC:
        return LayerStats(
            macs=layer.c_in * layer.c_out,
            weight_elems=layer.c_in * layer.c_out,
            in_elems=layer.c_in,
            out_elems=layer.c_out,
        )
    return LayerStats(
        macs=layer.c_out * layer.h_out * layer.w_out * layer.c_in * layer.k_h * layer.k_w,
        weight_elems=layer.c_out * layer.c_in * layer.k_h * layer.k_w,
        in_elems=layer.c_in * layer.h_in * layer.w_in,
        out_elems=layer.c_out * layer.out_h * layer.out_w,
    )


@lru_cache(maxsize=None)
def halo_elems(layer: LayerDesc, n_parts: int) -> int:
    """Overlap elements exchanged when ``layer``'s input is split into
    ``n_parts`` horizontal stripes (the consumer side of a WSP handoff).

    Each interior boundary needs ``max(k_h - stride, 0)`` extra input rows.
    """
    if layer.kind is not LayerKind.CONV:
        raise UnsupportedPartitionError("halo is only defined for conv layers")
    if n_parts < 1:
        raise InvalidLayerError("n_parts must be >= 1")
    return (n_parts - 1) * max(layer.k_h - layer.stride, 0) * layer.w_in * layer.c_in


@dataclass(frozen=True)
class Network:
    """An ordered chain of weight layers with validated shape compatibility."""

    layers: tuple[LayerDesc, ...]
    name: str = ""

    def __post_init__(self):
        if not self.layers:
            raise InvariantError(f"network {self.name!r}: must contain at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        for i in range(len(self.layers) - 1):
            _check_chain(self.layers[i], self.layers[i + 1], self.name, i)

    def __len__(self) -> int:
        return len(self.layers)


def _check_chain(prev: LayerDesc, cur: LayerDesc, net_name: str, idx: int):
    where = f"network {net_name!r}: layers {idx}->{idx + 1} ({prev.name!r}->{cur.name!r})"
    if cur.kind is LayerKind.CONV:
        if prev.kind is LayerKind.FC:
            if cur.c_in != prev.c_out or (cur.h_in, cur.w_in) != (1, 1):
                raise InvariantError(f"{where}: conv after fc must consume {prev.c_out}x1x1")
        elif cur.c_in != prev.c_out or (cur.h_in, cur.w_in) != (prev.out_h, prev.out_w):
            raise InvariantError(
                f"{where}: expected input {prev.c_out}x{prev.out_h}x{prev.out_w}, "
                f"got {cur.c_in}x{cur.h_in}x{cur.w_in}"
            )
    else:
        flat = layer_stats(prev).out_elems
        if cur.c_in != flat:
            raise InvariantError(
                f"{where}: fc input features {cur.c_in} != flattened predecessor output {flat}"
            )


@dataclass(frozen=True)
class HardwareConfig:
    """Package-level hardware description (compute hierarchy, buffers,
    interconnect bandwidths, and energy-per-operation figures).
    """

    num_chiplets: int = 16
    mesh_rows: int = 4
    mesh_cols: int = 4
    pes_per_chiplet: int = 16
    lanes_per_pe: int = 8
    macs_per_lane: int = 8
    clock_hz: float = 8.0e8
    weight_buf_per_pe: int = 65536
    global_buf: int = 65536
    nop_bw_per_chiplet: float = 1.0e11
    dram_bw_total: float = 1.0e11
    e_mac: float = 0.2e-12
    e_nop_bit: float = 1.3e-12
    e_dram_bit: float = 4.0e-12
    act_bytes: int = 1
    wgt_bytes: int = 1

    def __post_init__(self):
        for f in (
            "num_chiplets", "mesh_rows", "mesh_cols", "pes_per_chiplet", "lanes_per_pe",
            "macs_per_lane", "clock_hz", "weight_buf_per_pe", "global_buf",
            "nop_bw_per_chiplet", "dram_bw_total", "e_mac", "e_nop_bit", "e_dram_bit",
            "act_bytes", "wgt_bytes",
        ):
            if getattr(self, f) <= 0:
                raise InvariantError(f"hardware: {f} must be positive")
        if self.mesh_rows * self.mesh_cols != self.num_chiplets:
            raise InvariantError(
                f"hardware: mesh {self.mesh_rows}x{self.mesh_cols} != {self.num_chiplets} chiplets"
            )

    @property
    def chiplet_weight_capacity(self) -> int:
        """Weight bytes one chiplet can hold resident across its PE buffers."""
        return self.pes_per_chiplet * self.weight_buf_per_pe

    @property
    def lanes_per_chiplet(self) -> int:
        return self.pes_per_chiplet * self.lanes_per_pe

    @property
    def peak_macs_per_s(self) -> float:
        return (
            self.num_chiplets * self.lanes_per_chiplet * self.macs_per_lane * self.clock_hz
        )


def most_square_mesh(num_chiplets: int) -> tuple[int, int]:
    """Factor a chiplet count into the most-square ``rows x cols`` mesh."""
    best = (1, num_chiplets)
    r = 1
    while r * r <= num_chiplets:
        if num_chiplets % r == 0:
            best = (r, num_chiplets // r)
        r += 1
    return best


def default_hardware(num_chiplets: int = 16) -> HardwareConfig:
    rows, cols = most_square_mesh(num_chiplets)
    return HardwareConfig(num_chiplets=num_chiplets, mesh_rows=rows, mesh_cols=cols)


@dataclass(frozen=True)
class ClusterAssignment:
    """One pipeline stage: a contiguous layer range, its region, and per-layer
    partition choices.  ``streaming`` marks a cluster whose weights never fit
    on-package and are refetched from DRAM for every sample.
    """

    start: int
    end: int
    region_size: int
    placement: tuple[tuple[int, int], ...]
    partitions: tuple[Partition, ...]
    streaming: bool = False

    def __post_init__(self):
        if self.end <= self.start:
            raise InvariantError(f"cluster [{self.start},{self.end}) is empty")
        if self.region_size < 1:
            raise InvariantError("cluster region must contain at least one chiplet")
        if len(self.placement) != self.region_size:
            raise InvariantError(
                f"cluster [{self.start},{self.end}): placement lists {len(self.placement)} "
                f"chiplets, region_size is {self.region_size}"
            )
        if len(self.partitions) != self.end - self.start:
            raise InvariantError(
                f"cluster [{self.start},{self.end}): {len(self.partitions)} partitions "
                f"for {self.end - self.start} layers"
            )

    @property
    def num_layers(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class SegmentAssignment:
    clusters: tuple[ClusterAssignment, ...]

    @property
    def start(self) -> int:
        return self.clusters[0].start

    @property
    def end(self) -> int:
        return self.clusters[-1].end


@dataclass(frozen=True)
class Schedule:
    """Nested segment -> cluster -> (region, partitions) assignment covering a
    whole network.  Segments run sequentially; clusters within a segment form
    pipeline stages on disjoint chiplet regions covering the package.
    """

    segments: tuple[SegmentAssignment, ...]

    def validate(self, net: Network, hw: HardwareConfig) -> None:
        expect = 0
        all_coords = {
            (r, c) for r in range(hw.mesh_rows) for c in range(hw.mesh_cols)
        }
        for si, seg in enumerate(self.segments):
            if not seg.clusters:
                raise InvariantError(f"segment {si} has no clusters")
            total = sum(cl.region_size for cl in seg.clusters)
            if total != hw.num_chiplets:
                raise InvariantError(
                    f"segment {si}: region sizes sum to {total}, package has {hw.num_chiplets}"
                )
            used: set[tuple[int, int]] = set()
            for cl in seg.clusters:
                if cl.start != expect:
                    raise InvariantError(
                        f"segment {si}: cluster starts at layer {cl.start}, expected {expect}"
                    )
                expect = cl.end
                for coord in cl.placement:
                    if coord not in all_coords:
                        raise InvariantError(f"segment {si}: chiplet {coord} outside mesh")
                    if coord in used:
                        raise InvariantError(f"segment {si}: chiplet {coord} assigned twice")
                    used.add(coord)
                for li, p in enumerate(cl.partitions, start=cl.start):
                    if net.layers[li].kind is LayerKind.FC and p is not Partition.ISP:
                        raise InvariantError(f"layer {li} is fc and must use ISP")
            if used != all_coords:
                raise InvariantError(f"segment {si}: placements do not cover the mesh")
        if expect != len(net):
            raise InvariantError(
                f"schedule covers layers [0,{expect}), network has {len(net)}"
            )

    @property
    def num_layers(self) -> int:
        return self.segments[-1].clusters[-1].end if self.segments else 0

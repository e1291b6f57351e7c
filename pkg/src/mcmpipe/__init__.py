"""Merged-pipeline scheduler and analytic performance/energy estimator for
DNN inference on multi-chip-module accelerator packages."""

from .cost import (
    CostReport,
    Evaluator,
    PhaseTimes,
    SegmentPlan,
    comm_time,
    comm_volume,
    compute_time,
    evaluate,
    layer_latency,
    pipeline_time,
    prep_time,
    weight_footprint,
)
from .errors import (
    InfeasibleScheduleError,
    InvalidLayerError,
    InvalidSplitError,
    InvariantError,
    LayerTooLargeError,
    NoFeasibleScheduleError,
    ParseError,
    SchedulerError,
    SearchSpaceTooLargeError,
    SizeMismatchError,
    TooManyClustersError,
    UnsupportedPartitionError,
)
from .io import load_hardware, load_network, load_schedule, schedule_to_dict
from .model import (
    ClusterAssignment,
    HardwareConfig,
    LayerDesc,
    LayerKind,
    LayerStats,
    Network,
    Partition,
    Schedule,
    SegmentAssignment,
    default_hardware,
    halo_elems,
    layer_stats,
    most_square_mesh,
)
from .placement import Mesh, boundary_width, zigzag_place
from .search import (
    BaselineKind,
    SearchResult,
    compute_parallelism,
    design_space_size,
    divide_segments,
    exhaustive_search,
    gen_cmt,
    percentile_rank,
    proportional_allocate,
    rebalance_regions,
    schedule_baseline,
    schedule_scope,
    search_segment,
)
from .zoo import BUILTIN_NETWORKS, builtin_network

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

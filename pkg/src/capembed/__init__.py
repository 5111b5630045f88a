"""capembed: embed serially connected capacitive touchpoints into 3D prints."""

from .circuit import (
    BASELINE,
    DOUBLE,
    SINGLE,
    CircuitSpec,
    DelayProfile,
    ThresholdMarker,
    delay_profile,
    delay_separations,
    synthesize_session,
    threshold_time,
    transient_exact,
)
from .mesh import MeshError, TriangleMesh, read_stl, validate_mesh, write_stl
from .points import PointGeometry, Selection, SelectionError, TouchpointSet, build_point_geometry
from .routing import ConduitNetwork, PathGraph, RoutingError, build_graph, route_serial, shortest_path
from .serpentine import (
    ResistivityModel,
    SerpentinePath,
    UnfillableError,
    estimate_resistance,
    fill_serpentine,
    tune_to_target,
)
from .voxel import VoxelGrid, surface_distance, trim_shell, voxelize
from .wire_opt import GridSearchSpec, OptimizationResult, min_conduit_length, optimize_single_wire
from .robustness import (
    LadderSpec,
    PerturbationSpec,
    SnrSample,
    classify_session,
    compute_snr,
    epsilon_range,
    perturbation_accuracy,
)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline

__version__ = "0.1.0"

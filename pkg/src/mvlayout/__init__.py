"""Multi-view horizon-depth layout simulation, pseudo-labelling and evaluation."""

from .aggregation import ColumnAggregation, aggregate_column
from .config import ScenarioConfig, load_config, parse_config
from .consensus import PseudoLabelSet, generate_pseudo_labels
from .costvolume import CostVolume, DepthPlanes, build_cost_volume, extract_depth, fuse_depth
from .errors import ConfigError, GenerationFailure, InvalidArgument, NumericDomainError
from .geometry import BoundarySamples, CameraPose, HorizonDepth, d2l, l2d, longitude_grid
from .metrics import MetricReport, iou2d, iou3d
from .objectives import LossWeights, finetune_loss, pretrain_loss
from .simulator import NoiseSpec, OcclusionArc, RoomScene, RoomSpec, generate_room, render_depth

__version__ = "0.1.0"

__all__ = [
    "BoundarySamples", "CameraPose", "ColumnAggregation", "ConfigError", "CostVolume", "DepthPlanes",
    "GenerationFailure", "HorizonDepth", "InvalidArgument", "LossWeights", "MetricReport", "NoiseSpec",
    "NumericDomainError", "OcclusionArc", "PseudoLabelSet", "RoomScene", "RoomSpec", "ScenarioConfig",
    "aggregate_column", "build_cost_volume", "d2l", "extract_depth", "finetune_loss", "fuse_depth",
    "generate_pseudo_labels", "generate_room", "iou2d", "iou3d", "l2d", "load_config", "longitude_grid",
    "parse_config", "pretrain_loss", "render_depth",
]

"""Non-penetrative tensor partitioning for collaborative CNN inference.

Plans guillotine tilings of an input image across heterogeneous devices so
that the slowest device's compute plus halo-exchange latency is minimal.
"""

from .cost import CommModel, CostBreakdown, DeviceProfile, evaluate
from .kernels import BACKEND
from .model import LayerConfig, NetworkConfig, propagate_shapes, vgg_preset
from .mpa import brute_force_search, mpa_optimize
from .partition import (CutStep, PartitionScheme, Rect, guillotine_scheme,
                        strip_partition, validate_tiling)
from .scenario import MpaConfig, Scenario, load_scenario
from .sim import simulate

__all__ = [
    "BACKEND", "CommModel", "CostBreakdown", "CutStep", "DeviceProfile",
    "LayerConfig", "MpaConfig", "NetworkConfig", "PartitionScheme", "Rect",
    "Scenario", "brute_force_search", "evaluate", "guillotine_scheme",
    "load_scenario", "mpa_optimize", "propagate_shapes", "simulate",
    "strip_partition", "validate_tiling", "vgg_preset",
]

__version__ = "0.1.0"

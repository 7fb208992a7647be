"""Multi-layer global mobility networks: construction, statistics, flux models, communities."""

from .netcore import (
    CountryRegistry,
    LayerGraph,
    MultiLayerNetwork,
    NetworkError,
    Partition,
    filter_low_strength,
    strengths,
    strip_loops,
)

__version__ = "0.1.0"

__all__ = [
    "CountryRegistry",
    "LayerGraph",
    "MultiLayerNetwork",
    "NetworkError",
    "Partition",
    "filter_low_strength",
    "strengths",
    "strip_loops",
]

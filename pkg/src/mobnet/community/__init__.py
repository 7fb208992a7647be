from .analysis import SimilarityRow, SweepPoint, resolution_sweep, similarity_report
from .brute_force import brute_force_partition, restricted_growth_strings
from .combo import ComboOptimizer, ComboResult, best_of_restarts, combo_optimize
from .modularity import (
    ModularityContext,
    layer_matrix,
    modularity,
    multilayer_matrix,
    multilayer_modularity,
    null_weight,
)
from .nmi import confusion_matrix, nmi

__all__ = [
    "ComboOptimizer",
    "ComboResult",
    "ModularityContext",
    "SimilarityRow",
    "SweepPoint",
    "best_of_restarts",
    "brute_force_partition",
    "combo_optimize",
    "confusion_matrix",
    "layer_matrix",
    "modularity",
    "multilayer_matrix",
    "multilayer_modularity",
    "nmi",
    "null_weight",
    "resolution_sweep",
    "restricted_growth_strings",
    "similarity_report",
]

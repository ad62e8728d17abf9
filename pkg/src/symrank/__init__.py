"""symrank: rank-based tools for analyzing tree splits and selecting
symbolic features.

The package groups into: core domain types (datasets, expressions,
partitions, intervals), rank statistics including the concordant divergence,
oracle 2-partitions of the response, CART trees and their induced rankings,
piecewise-monotone transform comparison, symbolic feature generation, and a
reproducible feature-selection experiment harness with a CLI front end.
"""

from . import core, errors, evalsel, monotonic, partition, stats, symgen, tree

__all__ = ["core", "errors", "evalsel", "monotonic", "partition", "stats",
           "symgen", "tree"]
__version__ = "0.1.0"

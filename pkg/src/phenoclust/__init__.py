"""Sample-then-cluster analysis of phenotypic trait tables.

A table of units (genotypes) by traits is min-max normalized, a fixed-size
unequal-probability sample is drawn, the sample is clustered spectrally or
hierarchically, and the remaining units are attached by reverse mapping.
"""

__version__ = "0.1.0"

from .assign import assign_remaining, reverse_map
from .assignment import ClusterAssignment, same_partition
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, NumericalError, PhenoclustError
from .hclust import MergeHistory, hierarchical_cluster, merge_history
from .ingest import FeatureTable, NormalizedTable, encode_categorical, normalize, parse_table, read_table
from .sampling import (
    EstimateReport,
    InclusionPlan,
    SampleIndexSet,
    hajek_estimate,
    ht_estimate,
    inclusion_probabilities,
    pivotal_sample,
    vq_sample,
)
from .simgraph import SimilarityMatrix, distance, pairwise_distances, similarity_matrix
from .spectral import eigengap_estimate_k, embed, laplacian, smallest_eigenpairs, spectral_cluster
from .synth import make_blobs
from .validate import SilhouetteReport, silhouette

__all__ = [
    "ClusterAssignment",
    "ConfigError",
    "DataError",
    "EstimateReport",
    "FeatureTable",
    "InclusionPlan",
    "MergeHistory",
    "NormalizedTable",
    "NumericalError",
    "PhenoclustError",
    "RunConfig",
    "SampleIndexSet",
    "SilhouetteReport",
    "SimilarityMatrix",
    "assign_remaining",
    "distance",
    "eigengap_estimate_k",
    "embed",
    "encode_categorical",
    "hajek_estimate",
    "hierarchical_cluster",
    "ht_estimate",
    "inclusion_probabilities",
    "laplacian",
    "load_config",
    "make_blobs",
    "merge_history",
    "normalize",
    "pairwise_distances",
    "parse_table",
    "pivotal_sample",
    "read_table",
    "reverse_map",
    "same_partition",
    "silhouette",
    "similarity_matrix",
    "smallest_eigenpairs",
    "spectral_cluster",
    "vq_sample",
]

from .hdbscan import (
    HdbscanState, condense_tree, core_distances, hdbscan_fit, hdbscan_predict,
    mst_prim, mutual_reachability, single_linkage,
)
from .model import (
    DEFAULT_SUBSET, ClusterModel, RiskTier, ValidationReport, assign_tiers,
    fit_cluster_model, flatten_single, load_cluster_model, pad_and_flatten,
    save_cluster_model, validate_clusters,
)
from .reduce import (
    NeighborEmbeddingReducer, PcaReducer, fit_neighbor_embedding, fit_pca,
    reduce_matrix,
)

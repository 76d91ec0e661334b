"""Multi-network node embedding with constraint-exchanging stacked autoencoders."""
from .constraints import (ConstraintList, extract_threshold, extract_topk,
                          merge_constraints, pairwise_pcc)
from .diffusion import DiffusionMatrix, rwr, rwr_exact, transition_matrix
from .evaluation import (MetricsReport, accuracy, kfold_cv, micro_auprc,
                         micro_auroc, micro_f1, predict_scores, train_ovr)
from .graph_io import (LabelMatrix, NodeIndex, WeightedGraph, adjacency,
                       build_node_index, load_edge_list, load_labels)
from .neural import (AutoencoderPair, ConstraintMatrices, DenseLayer,
                     TrainConfig, train_autoencoder, train_semi_ae)
from .pipeline import EmbeddingSet, PipelineConfig, combine, run_deepmne

__version__ = "0.1.0"

__all__ = [
    "AutoencoderPair",
    "ConstraintList",
    "ConstraintMatrices",
    "DenseLayer",
    "DiffusionMatrix",
    "EmbeddingSet",
    "LabelMatrix",
    "MetricsReport",
    "NodeIndex",
    "PipelineConfig",
    "TrainConfig",
    "WeightedGraph",
    "accuracy",
    "adjacency",
    "build_node_index",
    "combine",
    "extract_threshold",
    "extract_topk",
    "kfold_cv",
    "load_edge_list",
    "load_labels",
    "merge_constraints",
    "micro_auprc",
    "micro_auroc",
    "micro_f1",
    "pairwise_pcc",
    "predict_scores",
    "run_deepmne",
    "rwr",
    "rwr_exact",
    "train_autoencoder",
    "train_ovr",
    "train_semi_ae",
    "transition_matrix",
]

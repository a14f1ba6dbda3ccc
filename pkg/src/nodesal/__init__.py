"""Tied-weight autoencoder training and histogram-based hidden-node saliency."""

__version__ = "0.1.0"

from .autoencoder import AutoencoderModel, decode, encode, gradients, load_model, mse_loss, pearson, save_model, sigmoid
from .dataio import (
    LabeledDataset,
    NormalizationRecord,
    apply_normalizer,
    fit_normalizer,
    generate_synthetic,
    load_matrix,
    save_matrix,
    select_subset,
    split_train_validation,
)
from .pca import PcaModel, fit_pca, project
from .saliency import (
    ActivationHistogram,
    NodeSaliency,
    SaliencyReport,
    binomial_proportions,
    build_histogram,
    ned,
    ned_class,
    node_weight_profile,
    rank_nodes,
    reference_distribution,
    sns,
    wce,
)
from .trainer import TrainConfig, TrainHistory, benchmark_scaling, init_weights, parallel_gradient, train

"""Graph-induced masked feed-forward networks."""
from .checkpoint import dumps_network, load_network, loads_network, save_network
from .network import BuildSpec, MaskedNetwork, block_sizes, build_network, extract_graph, softmax
from .training import (
    TrainScheme,
    accuracy,
    backward,
    confusion_matrix,
    evaluate,
    loss,
    metrics_from_confusion,
    sgd_step,
    train,
)

__all__ = [
    "BuildSpec",
    "MaskedNetwork",
    "TrainScheme",
    "accuracy",
    "backward",
    "block_sizes",
    "build_network",
    "confusion_matrix",
    "dumps_network",
    "evaluate",
    "extract_graph",
    "load_network",
    "loads_network",
    "loss",
    "metrics_from_confusion",
    "save_network",
    "sgd_step",
    "softmax",
    "train",
]

from segiqr.nn.config import ArchConfig, load_arch_config, parse_arch_config
from segiqr.nn.layers import softmax
from segiqr.nn.network import (
    ForwardResult,
    Network,
    PassCounter,
    build_network,
    cross_entropy_from_logits,
)
from segiqr.nn.train import TrainHyper, evaluate_accuracy, evaluate_loss, train
from segiqr.nn.weights_io import load_weights, save_weights, weights_to_bytes

__all__ = [
    "ArchConfig",
    "ForwardResult",
    "Network",
    "PassCounter",
    "TrainHyper",
    "build_network",
    "cross_entropy_from_logits",
    "evaluate_accuracy",
    "evaluate_loss",
    "load_arch_config",
    "load_weights",
    "parse_arch_config",
    "save_weights",
    "softmax",
    "train",
    "weights_to_bytes",
]

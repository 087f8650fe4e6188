"""Small CNN engine: NHWC float64 layers, Adam, training and checkpoints."""
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .layers import (
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    cross_entropy,
    dense_backward,
    dense_forward,
    maxpool2,
    maxpool2_backward,
    relu,
    relu_backward,
    softmax,
    softmax_backward,
    softmax_cross_entropy_backward,
)
from .network import Network, NetworkConfig, build_network, param_count
from .optim import AdamState, adam_step, decayed_lr
from .training import predict, stratified_split, train

__all__ = [
    "AdamState", "Checkpoint", "Network", "NetworkConfig", "adam_step", "batchnorm_backward",
    "batchnorm_forward", "build_network", "conv2d_backward", "conv2d_forward", "cross_entropy",
    "decayed_lr", "dense_backward", "dense_forward", "load_checkpoint", "maxpool2",
    "maxpool2_backward", "param_count", "predict", "relu", "relu_backward", "save_checkpoint",
    "softmax", "softmax_backward", "softmax_cross_entropy_backward", "stratified_split", "train",
]

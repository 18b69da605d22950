"""Minimal deterministic reverse-mode autodiff engine."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .nn import (
    BatchNorm2d,
    Conv2d,
    ConvLSTMCell,
    ConvTranspose2d,
    Dense,
    LayerNorm,
    LSTMCell,
    MultiHeadAttention,
    TransformerBlock,
    attention,
    convlstm_cell,
    dense,
    he_uniform,
    lstm_cell,
    mse,
)
from .optim import SGD, Adam, make_optimizer
from .tensor import Tensor, concat, conv2d, conv2d_transpose, set_finite_checks, softmax

__all__ = [
    "Adam",
    "BatchNorm2d",
    "Conv2d",
    "ConvLSTMCell",
    "ConvTranspose2d",
    "Dense",
    "LSTMCell",
    "LayerNorm",
    "MultiHeadAttention",
    "SGD",
    "Tensor",
    "TransformerBlock",
    "attention",
    "concat",
    "conv2d",
    "conv2d_transpose",
    "convlstm_cell",
    "dense",
    "grad_check",
    "he_uniform",
    "load_checkpoint",
    "lstm_cell",
    "make_optimizer",
    "mse",
    "save_checkpoint",
    "set_finite_checks",
    "softmax",
]

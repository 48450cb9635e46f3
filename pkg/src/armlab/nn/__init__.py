from armlab.nn.tensor import (
    Tensor, backward, no_grad, grad_enabled,
    add, sub, mul, power, exp, tanh, relu, gelu, absolute,
    tsum, tmean, reshape, transpose, concat, matmul, softmax, layer_norm, conv2d,
)
from armlab.nn.layers import (
    ParamStore, Linear, LayerNorm, MultiHeadAttention, MLP,
    ResidualBlock, StageConfig, BackboneConfig, ConvBackbone,
)
from armlab.nn.optim import OptimizerConfig, learning_rate, adam_step
from armlab.nn.checkpoint import save_checkpoint, load_checkpoint, restore_into
from armlab.nn.gradcheck import finite_difference_check

__all__ = [
    "Tensor", "backward", "no_grad", "grad_enabled",
    "add", "sub", "mul", "power", "exp", "tanh", "relu", "gelu", "absolute",
    "tsum", "tmean", "reshape", "transpose", "concat", "matmul", "softmax",
    "layer_norm", "conv2d",
    "ParamStore", "Linear", "LayerNorm", "MultiHeadAttention", "MLP",
    "ResidualBlock", "StageConfig", "BackboneConfig", "ConvBackbone",
    "OptimizerConfig", "learning_rate", "adam_step",
    "save_checkpoint", "load_checkpoint", "restore_into",
    "finite_difference_check",
]

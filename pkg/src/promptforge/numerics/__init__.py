"""Dense float64 tensors, reverse-mode gradients, optimizers, seeded RNG."""

from . import autodiff, optim, rng, tenio
from .autodiff import (
    Node,
    NumericFault,
    absval,
    add,
    arcsin,
    backward,
    constant,
    evaluate_with_gradients,
    exp,
    gather_rows,
    l2_normalize,
    leaf,
    log,
    matmul,
    mul,
    neg,
    reduce_mean,
    reduce_sum,
    relu,
    sigmoid,
    softmax,
    sqrt,
    stack,
    sub,
    tanh,
)
from .optim import AdamGroup, AdamState, MomentumGroup, MomentumState, adam_step, sgd_momentum_step
from .rng import RngStream, sample_beta, sample_gaussian

__all__ = [
    "Node", "NumericFault", "RngStream", "AdamState", "MomentumState",
    "AdamGroup", "MomentumGroup", "adam_step", "sgd_momentum_step",
    "sample_gaussian", "sample_beta", "backward", "evaluate_with_gradients",
    "leaf", "constant", "add", "sub", "mul", "neg", "matmul", "relu", "tanh",
    "sigmoid", "exp", "log", "absval", "sqrt", "arcsin", "reduce_sum",
    "reduce_mean", "softmax", "l2_normalize", "gather_rows", "stack",
    "autodiff", "optim", "rng", "tenio",
]

"""Minimal float64 tensor library with reverse-mode autodiff."""

from .functional import (
    batch_norm,
    conv2d,
    global_avg_pool,
    global_max_pool,
    l2_normalize_rows,
    log_sum_exp,
    relu,
    sigmoid_bce_with_logits,
    stop_gradient,
)
from .tensor import (
    GradTape,
    Tensor,
    add,
    as_tensor,
    check_finite,
    concat,
    div,
    exp,
    grad_enabled,
    log,
    matmul,
    mul,
    no_grad,
    pow_const,
    reshape,
    sqrt,
    take_rows,
    tmean,
    transpose,
    tsum,
)

__all__ = [
    "GradTape",
    "Tensor",
    "add",
    "as_tensor",
    "batch_norm",
    "check_finite",
    "concat",
    "conv2d",
    "div",
    "exp",
    "global_avg_pool",
    "global_max_pool",
    "grad_enabled",
    "l2_normalize_rows",
    "log",
    "log_sum_exp",
    "matmul",
    "mul",
    "no_grad",
    "pow_const",
    "relu",
    "reshape",
    "sigmoid_bce_with_logits",
    "sqrt",
    "stop_gradient",
    "take_rows",
    "tmean",
    "transpose",
    "tsum",
]

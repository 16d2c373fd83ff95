"""Neural-network operations on Tensors: convolution, pooling, batch norm,
row normalization, stabilized log-sum-exp, stop-gradient, and a stable
sigmoid cross-entropy.  All forward math is float64; every op defines its
exact reverse-mode closure.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ShapeError
from .tensor import Tensor, as_tensor, attach

EPS = 1e-12


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = np.maximum(a.data, 0.0)

    def backward(g):
        return (g * (a.data > 0.0),)

    return attach(out, (a,), backward)


def stop_gradient(a) -> Tensor:
    """Forward identity whose reverse pass contributes exactly zero."""
    a = as_tensor(a)

    def backward(g):
        return (None,)

    return attach(a.data, (a,), backward)


# -- convolution ------------------------------------------------------------


def _im2col(xp: np.ndarray, k: int, stride: int, h_out: int, w_out: int):
    n, c = xp.shape[:2]
    cols = np.empty((n, c, k, k, h_out, w_out), dtype=np.float64)
    for ki in range(k):
        for kj in range(k):
            cols[:, :, ki, kj] = xp[
                :, :, ki : ki + stride * h_out : stride, kj : kj + stride * w_out : stride
            ]
    return cols.transpose(0, 4, 5, 1, 2, 3).reshape(n * h_out * w_out, c * k * k)


def conv2d(x, weight, bias=None, stride: int = 1, padding: int = 0) -> Tensor:
    """Cross-correlation of NCHW input with FCkk kernels (no kernel flip)."""
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(
            f"conv2d expects NCHW input and FCkk kernel, got {x.shape} and {weight.shape}"
        )
    n, c, h, w = x.shape
    f, ck, kh, kw = weight.shape
    if kh != kw:
        raise ShapeError(f"conv2d kernels must be square, got {weight.shape}")
    k = kh
    if ck != c:
        raise ShapeError(
            f"conv2d channel mismatch: input {x.shape} vs kernel {weight.shape}"
        )
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ShapeError(
            f"kernel {k}x{k} larger than padded input "
            f"{h + 2 * padding}x{w + 2 * padding}"
        )
    h_out = (h + 2 * padding - k) // stride + 1
    w_out = (w + 2 * padding - k) // stride + 1

    if padding > 0:
        xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    else:
        xp = x.data
    cols = _im2col(xp, k, stride, h_out, w_out)
    w2 = weight.data.reshape(f, c * k * k)
    out2 = cols @ w2.T
    if bias is not None:
        bias = as_tensor(bias)
        out2 = out2 + bias.data
    out = out2.reshape(n, h_out, w_out, f).transpose(0, 3, 1, 2)

    inputs = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        g2 = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(-1, f)
        dw = (g2.T @ cols).reshape(f, c, k, k)
        dcols = (g2 @ w2).reshape(n, h_out, w_out, c, k, k).transpose(0, 3, 4, 5, 1, 2)
        dxp = np.zeros_like(xp)
        for ki in range(k):
            for kj in range(k):
                dxp[
                    :, :, ki : ki + stride * h_out : stride, kj : kj + stride * w_out : stride
                ] += dcols[:, :, ki, kj]
        dx = dxp if padding == 0 else dxp[:, :, padding : padding + h, padding : padding + w]
        if bias is None:
            return np.ascontiguousarray(dx), dw
        return np.ascontiguousarray(dx), dw, g2.sum(axis=0)

    return attach(out, inputs, backward)


# -- pooling ----------------------------------------------------------------


def global_avg_pool(x) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"global_avg_pool expects NCHW, got {x.shape}")
    n, c, h, w = x.shape
    out = x.data.mean(axis=(2, 3))

    def backward(g):
        return (np.broadcast_to(g[:, :, None, None] / (h * w), x.data.shape).copy(),)

    return attach(out, (x,), backward)


def global_max_pool(x) -> Tensor:
    """Spatial max per channel; gradient routes to the first maximal pixel."""
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"global_max_pool expects NCHW, got {x.shape}")
    n, c, h, w = x.shape
    flat = x.data.reshape(n, c, h * w)
    argmax = flat.argmax(axis=2)
    out = np.take_along_axis(flat, argmax[:, :, None], axis=2)[:, :, 0]

    def backward(g):
        dflat = np.zeros_like(flat)
        np.put_along_axis(dflat, argmax[:, :, None], g[:, :, None], axis=2)
        return (dflat.reshape(x.data.shape),)

    return attach(out, (x,), backward)


# -- normalization ----------------------------------------------------------


def l2_normalize_rows(x, eps: float = EPS) -> Tensor:
    """Scale each row of a 2-D tensor to unit L2 norm (epsilon-guarded)."""
    x = as_tensor(x)
    if x.ndim != 2:
        raise ShapeError(f"l2_normalize_rows expects 2-D input, got {x.shape}")
    sq = np.sum(x.data * x.data, axis=1, keepdims=True)
    if eps == 0.0 and np.any(sq == 0.0):
        raise NumericError("zero-norm row without epsilon guard")
    inv = 1.0 / np.sqrt(sq + eps)
    out = x.data * inv

    def backward(g):
        # d/dx (x/n) = g/n - x * (g.x) / n^3
        dot = np.sum(g * x.data, axis=1, keepdims=True)
        return (g * inv - x.data * (dot * inv**3),)

    return attach(out, (x,), backward)


def log_sum_exp(x, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Stabilized log(sum(exp(x))) along `axis`.

    `mask` (same-shape boolean, constant) restricts the sum to True entries;
    every reduced slice must keep at least one entry.
    """
    x = as_tensor(x)
    data = x.data
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != data.shape:
            raise ShapeError(f"mask shape {mask.shape} != input shape {data.shape}")
        if not np.all(mask.any(axis=axis)):
            raise NumericError("log_sum_exp: a reduced slice has no unmasked entry")
        work = np.where(mask, data, -np.inf)
    else:
        work = data
    m = work.max(axis=axis, keepdims=True)
    shifted = np.exp(work - m)
    if mask is not None:
        shifted = np.where(mask, shifted, 0.0)
    total = shifted.sum(axis=axis, keepdims=True)
    out = (m + np.log(total)).squeeze(axis=axis)

    def backward(g):
        soft = shifted / total
        return (np.expand_dims(g, axis) * soft,)

    return attach(out, (x,), backward)


# -- batch normalization ------------------------------------------------------


def batch_norm(x, gamma, beta, running_mean, running_var, training: bool,
               momentum: float = 0.9, eps: float = EPS) -> Tensor:
    """Batch normalization over all axes except the channel axis (axis 1 for
    NCHW, axis 1 for NC).  In training mode the batch statistics (biased
    variance) normalize the input and update the running buffers in place:
    running <- momentum * running + (1 - momentum) * batch.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim == 4:
        axes = (0, 2, 3)
        shape = (1, -1, 1, 1)
    elif x.ndim == 2:
        axes = (0,)
        shape = (1, -1)
    else:
        raise ShapeError(f"batch_norm expects NC or NCHW input, got {x.shape}")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(
            f"batch_norm affine parameters must have shape ({c},), "
            f"got {gamma.shape} and {beta.shape}"
        )

    if training:
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mean = running_mean
        var = running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean.reshape(shape)) * inv_std.reshape(shape)
    out = xhat * gamma.data.reshape(shape) + beta.data.reshape(shape)

    count = x.data.size // c

    def backward(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * gamma.data.reshape(shape)
        if training:
            mean_dxhat = dxhat.mean(axis=axes).reshape(shape)
            mean_dxhat_xhat = (dxhat * xhat).mean(axis=axes).reshape(shape)
            dx = inv_std.reshape(shape) * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)
        else:
            dx = dxhat * inv_std.reshape(shape)
        return dx, dgamma, dbeta

    del count
    return attach(out, (x, gamma, beta), backward)


# -- classification loss -------------------------------------------------------


def sigmoid_bce_with_logits(logits, targets) -> Tensor:
    """Mean binary cross-entropy against {0,1} targets, computed in the
    log-space stable form max(x,0) - x*y + log1p(exp(-|x|)).
    """
    logits = as_tensor(logits)
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != logits.shape:
        raise ShapeError(f"targets shape {y.shape} != logits shape {logits.shape}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise NumericError("targets must be 0/1")
    x = logits.data
    per = np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))
    out = np.float64(per.mean())

    def backward(g):
        sig = 1.0 / (1.0 + np.exp(-x))
        return (g * (sig - y) / x.size,)

    return attach(out, (logits,), backward)

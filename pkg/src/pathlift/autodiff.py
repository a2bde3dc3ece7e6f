"""Reverse-mode differentiation over the network DAG.

One tape pass per batch: forward stores every neuron's value (a vector over
the batch), backward walks neurons in reverse topological order and
accumulates adjoints into the flat parameter coordinate vector.  Convention
choices that matter:

* relu passes a zero subgradient at exactly 0;
* kpool routes its adjoint to the selected antecedent only (first one, in
  stored antecedent order, achieving the k-th largest contribution), the
  same tie-break the forward pass and the path activations use;
* kpool bias coordinates are pinned to zero, so their gradient is reported
  as 0.

The path norm gradient applies the chain rule through the absolute-value
surrogate with sign(0) taken to be 0.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, MissingData, PathliftError
from .graph import IDENTITY, KPOOL, RELU, Architecture, ParamVector, _check_bound
from .metrics import absolute_surrogate


def _as_batch(arch: Architecture, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != arch.d_in:
        raise DimensionMismatch(f"input batch must have shape (B, {arch.d_in}), got {x.shape}")
    return x


def batch_values(arch: Architecture, theta: ParamVector, x):
    """Forward tape: per-neuron value arrays [n_neurons, B] plus, for each
    kpool neuron, the selected antecedent slot per batch element."""
    _check_bound(arch, theta)
    x = _as_batch(arch, x)
    b = x.shape[0]
    vec = theta.vec
    vals = np.zeros((arch.n_neurons, b))
    vals[arch.input_pos] = x.T
    winners = {}
    for j in arch.non_input_pos:
        contrib = vec[arch.in_coords[j]][:, None] * vals[arch.ant[j]]
        kind = arch.kinds[j]
        if kind == KPOOL:
            k = arch.pool_k[j]
            kth = np.partition(contrib, contrib.shape[0] - k, axis=0)[contrib.shape[0] - k]
            winners[int(j)] = np.argmax(contrib == kth[None, :], axis=0)
            vals[j] = kth
        else:
            pre = vec[arch.bias_coord[j]] + contrib.sum(axis=0)
            vals[j] = pre if kind == IDENTITY else np.maximum(pre, 0.0)
    return vals, winners


def backward(arch: Architecture, theta: ParamVector, vals, winners, out_adjoint):
    """Adjoint sweep; returns the gradient over the parameter coordinates.

    ``out_adjoint`` has shape [d_out, B]: the derivative of the scalar being
    differentiated with respect to each output neuron, per batch element.
    """
    nb = vals.shape[1]
    vec = theta.vec
    adj = np.zeros((arch.n_neurons, nb))
    adj[arch.output_pos] = out_adjoint
    grad = np.zeros(arch.n_coords)
    for j in arch.non_input_pos[::-1]:
        g = adj[j]
        kind = arch.kinds[j]
        ant = arch.ant[j]
        w = vec[arch.in_coords[j]]
        if kind == KPOOL:
            sel = winners[int(j)]
            gm = (sel[None, :] == np.arange(ant.size)[:, None]) * g[None, :]
            grad[arch.in_coords[j]] += (vals[ant] * gm).sum(axis=1)
            adj[ant] += w[:, None] * gm
        else:
            if kind == RELU:
                g = g * (vals[j] > 0.0)
            grad[arch.bias_coord[j]] += g.sum()
            grad[arch.in_coords[j]] += vals[ant] @ g
            adj[ant] += w[:, None] * g[None, :]
    return grad


def _aggregate(arch: Architecture, vals, aggregate, target):
    """Scalar value and output adjoint [d_out, B] for the chosen aggregate."""
    out = vals[arch.output_pos]  # [d_out, B]
    nb = out.shape[1]
    if aggregate == "sum_outputs":
        return float(out.sum()), np.ones_like(out)
    if target is None:
        raise MissingData(f"aggregate {aggregate!r} needs a target")
    if aggregate == "squared_error":
        y = np.asarray(target, dtype=np.float64)
        # accepted target shapes: (B, d_out); (B,) when d_out == 1; (d_out,)
        # as a shared target for the whole batch
        if y.ndim == 2 and y.shape == (nb, arch.d_out):
            y = y.T
        elif y.ndim == 1 and arch.d_out == 1 and y.shape[0] == nb:
            y = y[None, :]
        elif y.ndim == 1 and y.shape[0] == arch.d_out:
            y = np.repeat(y[:, None], nb, axis=1)
        else:
            raise DimensionMismatch(
                f"target shape {y.shape} does not fit batch {nb} x {arch.d_out} outputs"
            )
        diff = out - y
        return float(0.5 * np.sum(diff * diff)), diff
    if aggregate == "logistic":
        y = np.asarray(target).reshape(-1)
        if y.shape[0] != nb:
            raise DimensionMismatch(f"need one class label per batch element, got {y.shape}")
        if arch.d_out == 1:
            z = out[0]
            value = float(np.sum(np.logaddexp(0.0, z) - y * z))
            return value, (1.0 / (1.0 + np.exp(-z)) - y)[None, :]
        yi = y.astype(np.int64)
        if yi.min() < 0 or yi.max() >= arch.d_out:
            raise DimensionMismatch(f"class labels must lie in [0, {arch.d_out})")
        zmax = out.max(axis=0)
        lse = zmax + np.log(np.exp(out - zmax).sum(axis=0))
        value = float(np.sum(lse - out[yi, np.arange(nb)]))
        p = np.exp(out - lse)
        p[yi, np.arange(nb)] -= 1.0
        return value, p
    raise PathliftError(f"unknown aggregate {aggregate!r}")


def scalar_value(arch: Architecture, theta: ParamVector, x, aggregate="sum_outputs", target=None):
    vals, _ = batch_values(arch, theta, x)
    value, _ = _aggregate(arch, vals, aggregate, target)
    return value


def grad_scalar(arch: Architecture, theta: ParamVector, x, aggregate="sum_outputs", target=None):
    """(scalar, gradient over parameter coordinates).

    The scalar is summed over the batch: the sum of all outputs, the summed
    squared-error loss 0.5*|out - y|^2, or the summed logistic loss
    (softmax cross-entropy against class labels; a sigmoid against 0/1
    labels when there is a single output).
    """
    vals, winners = batch_values(arch, theta, x)
    value, out_adj = _aggregate(arch, vals, aggregate, target)
    return value, backward(arch, theta, vals, winners, out_adj)


def grad_path_norm(arch: Architecture, theta: ParamVector) -> np.ndarray:
    """Gradient of the l1 path norm at theta.

    One forward/backward pass through the absolute-value surrogate followed
    by the sign chain rule, with sign(0) = 0.  Multiplying coordinatewise by
    theta itself yields each coordinate's total path weight.
    """
    s, t = absolute_surrogate(arch, theta, q=1.0)
    _, g = grad_scalar(s, t, np.ones(arch.d_in), aggregate="sum_outputs")
    return np.sign(theta.vec) * g


def grad_check(
    arch: Architecture,
    theta: ParamVector,
    x,
    aggregate="sum_outputs",
    target=None,
    eps: float = 1e-6,
):
    """Central-difference check of grad_scalar.

    Returns (autodiff gradient, finite-difference gradient, max relative
    error), the relative error being measured against the larger magnitude
    with a 1e-12 floor.  Meaningful only when no activation sits within eps
    of its kink.
    """
    _, ad = grad_scalar(arch, theta, x, aggregate, target)
    fd = np.zeros_like(ad)
    base = theta.vec
    for i in range(arch.n_coords):
        step = np.zeros_like(base)
        step[i] = eps
        up = scalar_value(arch, ParamVector(arch, base + step), x, aggregate, target)
        dn = scalar_value(arch, ParamVector(arch, base - step), x, aggregate, target)
        fd[i] = (up - dn) / (2.0 * eps)
    denom = np.maximum(np.maximum(np.abs(ad), np.abs(fd)), 1e-12)
    rel = float(np.max(np.abs(ad - fd) / denom)) if ad.size else 0.0
    return ad, fd, rel

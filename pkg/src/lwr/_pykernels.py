"""NumPy implementations of the hot kernels.

This is the reference backend. ``_ckernels.pyx`` mirrors every function here
with the same signature; ``lwr.kernels`` picks one at import.

Activation codes: 0 linear, 1 tanh, 2 relu.
Prediction-loss codes: 0 hinge, 1 squared error, 2 epsilon-insensitive.
Meta-loss branch codes: 0 zero, 1 accept, 2 reject.
"""

from __future__ import annotations

import numpy as np

LINEAR, TANH, RELU = 0, 1, 2
HINGE, SQUARED, EPS_INSENSITIVE = 0, 1, 2
BRANCH_ZERO, BRANCH_ACCEPT, BRANCH_REJECT = 0, 1, 2


def _activate(z, act):
    if act == LINEAR:
        return z
    if act == TANH:
        return np.tanh(z)
    return np.maximum(z, 0.0)


def mlp_forward(weights, biases, acts, X):
    """Batched forward pass.

    Returns ``(scores, pres, posts)`` where ``posts[0]`` is the input batch and
    ``posts[k + 1]``/``pres[k]`` are layer ``k``'s post/pre-activations.
    """
    a = np.ascontiguousarray(X, dtype=np.float64)
    pres, posts = [], [a]
    for W, b, act in zip(weights, biases, acts):
        z = a @ W.T
        z += b
        a = _activate(z, act)
        pres.append(z)
        posts.append(a)
    return a[:, 0].copy(), pres, posts


def mlp_backward(weights, acts, pres, posts, upstream):
    """Gradients of ``sum_i upstream[i] * score_i`` w.r.t. all weights and biases."""
    delta = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
    n_layers = len(weights)
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        act = acts[k]
        if act == TANH:
            delta = delta * (1.0 - posts[k + 1] * posts[k + 1])
        elif act == RELU:
            delta = delta * (pres[k] > 0.0)
        d_weights[k] = delta.T @ posts[k]
        d_biases[k] = delta.sum(axis=0)
        if k > 0:
            delta = delta @ weights[k]
    return d_weights, d_biases


def prediction_loss(kind, h, y, eps):
    h = np.asarray(h, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if kind == HINGE:
        margin = 1.0 - y * h
        active = margin > 0.0
        return np.where(active, margin, 0.0), np.where(active, -y, 0.0)
    diff = h - y
    if kind == SQUARED:
        return diff * diff, 2.0 * diff
    excess = np.abs(diff) - eps
    active = excess > 0.0
    return np.where(active, excess, 0.0), np.where(active, np.sign(diff), 0.0)


def meta_loss(l, r, c):
    l = np.asarray(l, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    accept = r + l
    reject = c * (1.0 - r)
    value = np.maximum(np.maximum(accept, reject), 0.0)
    # priority accept > reject > zero on ties
    is_accept = accept == value
    is_reject = ~is_accept & (reject == value)
    branch = np.where(is_accept, BRANCH_ACCEPT, np.where(is_reject, BRANCH_REJECT, BRANCH_ZERO))
    d_l = is_accept.astype(np.float64)
    d_r = np.where(is_accept, 1.0, np.where(is_reject, -c, 0.0))
    return value, d_l, d_r, branch.astype(np.int8)


def adam_step(param, grad, m, v, lr, beta1, beta2, eps, t):
    """One in-place Adam update; ``t`` is the 1-based step count."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def sgd_step(param, grad, buf, lr, momentum):
    """In-place (heavy-ball) SGD; ``buf`` is the velocity."""
    if momentum:
        buf *= momentum
        buf += grad
        param -= lr * buf
    else:
        param -= lr * grad


def auc_midrank(scores, positive):
    """Mann-Whitney AUC with midranks; ``positive`` is a boolean mask."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    # boundaries of runs of equal scores
    starts = np.flatnonzero(np.r_[True, sorted_scores[1:] != sorted_scores[:-1]])
    ends = np.r_[starts[1:], scores.size]
    run_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(scores.size)
    ranks[order] = np.repeat(run_rank, ends - starts)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)

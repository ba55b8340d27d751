"""Small fully-connected networks with hand-written gradients.

Parameters are lists of [W, b] pairs (float64). The backward pass
returns both the parameter gradients and the gradient with respect to
the input batch, so losses can be chained across networks (the actor
update backpropagates through the critic's input). Gradient correctness
against central finite differences is the contract the test suite
enforces.
"""

from __future__ import annotations

import numpy as np


def init_mlp(sizes, rng: np.random.Generator):
    """Uniform fan-in initialization for layer sizes [n0, n1, ..., nk]."""
    params = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        w = rng.uniform(-bound, bound, (n_in, n_out))
        b = rng.uniform(-bound, bound, n_out)
        params.append([w, b])
    return params


def mlp_forward(params, x, out_act: str = "linear"):
    """Forward pass; hidden activations are rectifiers.

    out_act: "linear" or "tanh". Returns (y, cache) with cache holding
    the layer inputs and pre-activations needed for the backward pass.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = x
    inputs = []
    pres = []
    n = len(params)
    for i, (w, b) in enumerate(params):
        inputs.append(h)
        z = h @ w + b
        pres.append(z)
        if i < n - 1:
            h = np.maximum(z, 0.0)
        else:
            h = np.tanh(z) if out_act == "tanh" else z
    return h, (inputs, pres, h, out_act)


def mlp_backward(params, cache, dy):
    """Backward pass for an upstream gradient dy on the output.

    Returns (grads, dx): grads mirrors the parameter structure, dx is the
    gradient with respect to the input batch.
    """
    inputs, pres, y, out_act = cache
    dy = np.asarray(dy, dtype=float)
    grads = [None] * len(params)
    n = len(params)
    dz = dy * (1.0 - y * y) if out_act == "tanh" else dy.copy()
    for i in range(n - 1, -1, -1):
        w, _ = params[i]
        grads[i] = [inputs[i].T @ dz, dz.sum(axis=0)]
        dh = dz @ w.T
        if i > 0:
            dz = dh * (pres[i - 1] > 0.0)
    return grads, dh


def clone_params(params):
    return [[w.copy(), b.copy()] for w, b in params]


def polyak_update(target, online, tau: float):
    """In place: target <- tau * online + (1 - tau) * target."""
    for (tw, tb), (ow, ob) in zip(target, online):
        tw *= 1.0 - tau
        tw += tau * ow
        tb *= 1.0 - tau
        tb += tau * ob


def zeros_like_params(params):
    return [[np.zeros_like(w), np.zeros_like(b)] for w, b in params]


def add_scaled(dst, src, scale: float):
    for (dw, db), (sw, sb) in zip(dst, src):
        dw += scale * sw
        db += scale * sb


def flatten_params(params) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in params])


def set_flat_params(params, flat: np.ndarray):
    i = 0
    for pair in params:
        for j in range(2):
            n = pair[j].size
            pair[j][...] = flat[i : i + n].reshape(pair[j].shape)
            i += n


def grad_global_norm(grads) -> float:
    ss = 0.0
    for w, b in grads:
        ss += float(np.sum(w * w)) + float(np.sum(b * b))
    return float(np.sqrt(ss))


def clip_grads(grads, max_norm: float):
    """Scale gradients in place so the global norm is at most max_norm."""
    if max_norm <= 0:
        return grads
    norm = grad_global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        for w, b in grads:
            w *= scale
            b *= scale
    return grads


class SgdMomentum:
    """Plain gradient descent with momentum: v <- mu v + g; p <- p - lr v."""

    def __init__(self, params, lr: float, momentum: float = 0.9):
        self.lr = lr
        self.momentum = momentum
        self.velocity = zeros_like_params(params)

    def step(self, params, grads):
        for (w, b), (gw, gb), (vw, vb) in zip(params, grads, self.velocity):
            vw *= self.momentum
            vw += gw
            vb *= self.momentum
            vb += gb
            w -= self.lr * vw
            b -= self.lr * vb


class Adam:
    """Adaptive-moment estimation with the usual bias correction."""

    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = zeros_like_params(params)
        self.v = zeros_like_params(params)
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(params, grads, self.m, self.v):
            for p, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def make_optimizer(name: str, params, lr: float, momentum: float = 0.9):
    if name == "adam":
        return Adam(params, lr)
    if name == "sgd":
        return SgdMomentum(params, lr, momentum)
    raise ValueError(f"unknown optimizer {name!r}")


def finite_diff_grads(loss_fn, params, eps: float = 1e-6):
    """Central-difference gradient of loss_fn() with respect to every entry.

    loss_fn is a closure over params; entries are perturbed in place.
    Intended for small test networks only.
    """
    grads = zeros_like_params(params)
    for pair, gpair in zip(params, grads):
        for arr, garr in zip(pair, gpair):
            flat = arr.ravel()
            gflat = garr.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                hi = loss_fn()
                flat[i] = orig - eps
                lo = loss_fn()
                flat[i] = orig
                gflat[i] = (hi - lo) / (2.0 * eps)
    return grads


def max_rel_grad_err(analytic, numeric) -> float:
    """Worst relative disagreement between two gradient structures."""
    worst = 0.0
    for (aw, ab), (nw, nb) in zip(analytic, numeric):
        for a, n in ((aw, nw), (ab, nb)):
            denom = np.maximum(np.abs(a) + np.abs(n), 1e-8)
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst

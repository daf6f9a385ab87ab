"""Fully connected ReLU regressor trained with Adam and early stopping.

Parameters live in one flat float64 buffer; each layer's weight matrix
(row-major, fan_in x fan_out) and bias are views into it, so the optimizer
updates everything with a handful of vector operations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels

MLP_LAYERS = (2, 5, 10)
MLP_UNITS = (32, 64, 128)


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class MlpHyper:
    n_hidden_layers: int = 2
    units_per_layer: int = 32
    batch_size: int = 16
    patience: int = 10
    max_epochs: int = 500
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.n_hidden_layers not in MLP_LAYERS or self.units_per_layer not in MLP_UNITS:
            raise ValueError(f"architecture must come from {MLP_LAYERS} x {MLP_UNITS}")
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ValueError("batch_size, patience and max_epochs must be >= 1")

    @property
    def sizes(self) -> tuple[int, ...]:
        return (3, *([self.units_per_layer] * self.n_hidden_layers), 1)

    def n_params(self) -> int:
        return n_params(self.sizes)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def n_params(sizes) -> int:
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def unpack(theta, sizes):
    """[(W, b), ...] as views into theta."""
    out = []
    k = 0
    for a, b in zip(sizes[:-1], sizes[1:]):
        W = theta[k:k + a * b].reshape(a, b)
        k += a * b
        out.append((W, theta[k:k + b]))
        k += b
    return out


def init_params(sizes, rng: np.random.Generator) -> np.ndarray:
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases."""
    theta = np.zeros(n_params(sizes))
    for (W, _), fan_in in zip(unpack(theta, sizes), sizes[:-1]):
        lim = math.sqrt(6.0 / fan_in)
        W[...] = rng.uniform(-lim, lim, size=W.shape)
    return theta


def forward(theta, sizes, X) -> np.ndarray:
    h = np.asarray(X, dtype=float)
    layers = unpack(theta, sizes)
    for W, b in layers[:-1]:
        h = h @ W + b
        np.maximum(h, 0.0, out=h)
    W, b = layers[-1]
    return (h @ W + b)[:, 0]


def loss_and_grad(theta, sizes, X, y, grad=None):
    """Mean squared error and its gradient with respect to theta."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    layers = unpack(theta, sizes)
    acts = [X]
    h = X
    for W, b in layers[:-1]:
        h = h @ W + b
        np.maximum(h, 0.0, out=h)
        acts.append(h)
    W, b = layers[-1]
    r = (h @ W + b)[:, 0] - y
    loss = float(r @ r) / len(y)
    if grad is None:
        grad = np.empty_like(theta)
    glayers = unpack(grad, sizes)
    d = (2.0 / len(y)) * r[:, None]
    for i in range(len(layers) - 1, -1, -1):
        gW, gb = glayers[i]
        np.matmul(acts[i].T, d, out=gW)
        gb[...] = d.sum(axis=0)
        if i:
            d = d @ layers[i][0].T
            d *= acts[i] > 0
    return loss, grad


@dataclass
class MlpFit:
    theta: np.ndarray
    sizes: tuple
    epochs_run: int
    best_epoch: int
    best_val_loss: float
    history: list


def train(Xtr, ytr, Xval, yval, hyper: MlpHyper, seed: int) -> MlpFit:
    """Adam on shuffled mini-batches; keep the best-validation weights.

    Stops once validation loss has not improved for `patience` epochs.
    Inputs and targets are expected already standardized.
    """
    Xtr = np.asarray(Xtr, dtype=float)
    ytr = np.asarray(ytr, dtype=float)
    if len(ytr) == 0 or len(yval) == 0:
        raise ValueError("train and validation sets must be non-empty")
    rng = np.random.default_rng(seed)
    sizes = hyper.sizes
    theta = init_params(sizes, rng)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    g = np.empty_like(theta)
    tmp = np.empty_like(theta)
    b1, b2, lr, eps = hyper.beta1, hyper.beta2, hyper.learning_rate, hyper.eps
    step = 0
    n = len(ytr)
    best = (math.inf, 0, theta.copy())
    history = []
    epoch = 0
    for epoch in range(1, hyper.max_epochs + 1):
        perm = rng.permutation(n)
        for s in range(0, n, hyper.batch_size):
            idx = perm[s:s + hyper.batch_size]
            loss, _ = loss_and_grad(theta, sizes, Xtr[idx], ytr[idx], g)
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch)
            step += 1
            kernels.adam_step(theta, g, m, v, tmp, lr / (1 - b1 ** step), b1, b2,
                              1.0 / (1 - b2 ** step), eps)
        r = forward(theta, sizes, Xval) - yval
        val = float(r @ r) / len(r)
        if not math.isfinite(val):
            raise TrainingDiverged(epoch)
        history.append(val)
        if val < best[0]:
            best = (val, epoch, theta.copy())
        elif epoch - best[1] >= hyper.patience:
            break
    return MlpFit(best[2], sizes, epoch, best[1], best[0], history)


def _tail(z, layers, k, y):
    """Loss and ReLU on/off pattern, given the pre-activation z of layer k."""
    masks = []
    for W, b in layers[k + 1:]:
        on = z > 0
        masks.append(on)
        z = np.where(on, z, 0) @ W + b
    r = z[:, 0] - y
    return np.sum(r * r) / len(y), masks


def gradient_check(sizes, X, y, seed: int = 0, step: float = 1e-3, max_halvings: int = 40):
    """Largest relative gap between backprop and central differences.

    With the ReLU pattern fixed the loss is exactly quadratic in any single
    parameter, so the central difference carries no truncation error and a
    large step keeps rounding small. Each difference is taken in extended
    precision; when a perturbation flips any unit the step is halved until
    the pattern holds. The forward pass is cached up to the perturbed layer,
    and a weight W[i, j] only moves column j of that layer's pre-activation.
    """
    ld = np.longdouble
    rng = np.random.default_rng(seed)
    theta = init_params(sizes, rng)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _, g = loss_and_grad(theta, sizes, X, y)
    layers = unpack(theta.astype(ld), sizes)
    yl = y.astype(ld)
    num = np.empty_like(theta)
    k0 = 0
    a = X.astype(ld)
    for k, (W, b) in enumerate(layers):
        z0 = a @ W + b
        _, base = _tail(z0, layers, k, yl)
        fan_in, fan_out = W.shape
        for i in range(fan_in + 1):  # last row stands for the bias
            col = np.ones(len(yl), dtype=ld) if i == fan_in else a[:, i]
            for j in range(fan_out):
                h = ld(step)
                for _ in range(max_halvings):
                    zp = z0.copy()
                    zp[:, j] += col * h
                    zm = z0.copy()
                    zm[:, j] -= col * h
                    fp, mp = _tail(zp, layers, k, yl)
                    fm, mm = _tail(zm, layers, k, yl)
                    if all(np.array_equal(u, v) and np.array_equal(u, w)
                           for u, v, w in zip(base, mp, mm)):
                        break
                    h /= 2
                idx = k0 + (fan_in * fan_out + j if i == fan_in else i * fan_out + j)
                num[idx] = float((fp - fm) / (2 * h))
        k0 += fan_in * fan_out + fan_out
        a = np.where(z0 > 0, z0, 0)
    scale = np.maximum(np.maximum(np.abs(g), np.abs(num)), np.finfo(float).tiny)
    rel = np.where((g == 0) & (num == 0), 0.0, np.abs(g - num) / scale)
    return float(rel.max()), g, num

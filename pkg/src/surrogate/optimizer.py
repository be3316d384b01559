"""AdamW, warmup-cosine schedule and gradient clipping."""

import math
from dataclasses import dataclass

import numpy as np


class AdamW:
    """Adam with decoupled weight decay, updating parameter arrays in place."""

    def __init__(
        self,
        params: list[np.ndarray],
        lr: float = 1e-3,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray], lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / bias1
            v_hat = v / bias2
            p -= lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * p)


@dataclass(frozen=True)
class WarmupCosineSchedule:
    """Linear warmup to peak_lr, then cosine decay reaching 0 at total_epochs.

    Epochs are 1-based: epoch e < warmup gets peak_lr * e / warmup.
    """
    peak_lr: float
    warmup_epochs: int
    total_epochs: int

    def __call__(self, epoch: int) -> float:
        if epoch < self.warmup_epochs:
            return self.peak_lr * epoch / self.warmup_epochs
        span = self.total_epochs - self.warmup_epochs
        if span <= 0:
            return self.peak_lr
        progress = min((epoch - self.warmup_epochs) / span, 1.0)
        return self.peak_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def global_norm(grads: list[np.ndarray]) -> float:
    return math.sqrt(math.fsum(float(np.sum(g * g)) for g in grads))


def clip_grad_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale grads in place so their global L2 norm is at most max_norm.

    Returns the norm before clipping.
    """
    norm = global_norm(grads)
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm

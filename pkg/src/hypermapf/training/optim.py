"""Gradient-descent optimisers over named parameter tensors."""

from __future__ import annotations

import numpy as np

from ..autodiff import Gradients, Tensor


class AdamW:
    """Adaptive moment estimation with decoupled weight decay:
    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)."""

    def __init__(self, tensors: dict[str, Tensor], learning_rate: float,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.tensors = dict(tensors)
        self.lr = learning_rate
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.step_count = 0
        self._m = {k: np.zeros_like(t.data) for k, t in self.tensors.items()}
        self._v = {k: np.zeros_like(t.data) for k, t in self.tensors.items()}

    def step(self, grads: Gradients) -> None:
        self.step_count += 1
        b1, b2 = self.betas
        bias1 = 1.0 - b1 ** self.step_count
        bias2 = 1.0 - b2 ** self.step_count
        for name, t in self.tensors.items():
            g = grads.wrt(t)
            self._m[name] = b1 * self._m[name] + (1.0 - b1) * g
            self._v[name] = b2 * self._v[name] + (1.0 - b2) * g * g
            m_hat = self._m[name] / bias1
            v_hat = self._v[name] / bias2
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * t.data
            t.data -= self.lr * update


class Adam(AdamW):
    """AdamW without weight decay; a zero gradient leaves parameters
    exactly unchanged."""

    def __init__(self, tensors: dict[str, Tensor], learning_rate: float,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        super().__init__(tensors, learning_rate, betas, eps, weight_decay=0.0)

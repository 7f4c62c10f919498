"""
In-place optimizers for ToyModel parameters.
"""

from abc import ABC, abstractmethod

import numpy as np

from semsoft.models import TrainConfig


class Optimizer(ABC):
    """
    Base class for parameter updates.

    Weight decay is either coupled (added to the gradient) or decoupled
    (applied to the parameters directly, "true" weight decay).
    """

    def __init__(
        self, learning_rate: float, weight_decay: float = 0.0, decoupled: bool = False
    ) -> None:
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.decoupled = decoupled

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update `params` in place."""
        for name in sorted(params):
            grad = grads[name]
            if self.weight_decay and not self.decoupled:
                grad = grad + self.weight_decay * params[name]
            params[name] -= self._update(name, grad)
            if self.weight_decay and self.decoupled:
                params[name] -= self.learning_rate * self.weight_decay * params[name]

    @abstractmethod
    def _update(self, name: str, grad: np.ndarray) -> np.ndarray:
        """Step to subtract for one parameter."""


class SGD(Optimizer):
    """Plain gradient descent."""

    def _update(self, name: str, grad: np.ndarray) -> np.ndarray:
        return self.learning_rate * grad


class Adam(Optimizer):
    """Adam with bias correction."""

    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
        decoupled: bool = False,
    ) -> None:
        super().__init__(learning_rate, weight_decay, decoupled)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.steps: dict[str, int] = {}

    def _update(self, name: str, grad: np.ndarray) -> np.ndarray:
        m = self.m.get(name, np.zeros_like(grad))
        v = self.v.get(name, np.zeros_like(grad))
        step = self.steps.get(name, 0) + 1
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad**2
        self.m[name], self.v[name], self.steps[name] = m, v, step
        m_hat = m / (1.0 - self.beta1**step)
        v_hat = v / (1.0 - self.beta2**step)
        return self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(cfg: TrainConfig) -> Optimizer:
    if cfg.optimizer == "sgd":
        return SGD(cfg.learning_rate, cfg.weight_decay, cfg.decoupled_weight_decay)
    return Adam(
        cfg.learning_rate,
        beta1=cfg.adam_beta1,
        beta2=cfg.adam_beta2,
        eps=cfg.adam_eps,
        weight_decay=cfg.weight_decay,
        decoupled=cfg.decoupled_weight_decay,
    )

"""Adam optimizer with bias correction over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autodiff import Tensor
from .core import DimensionError


@dataclass
class AdamState:
    """First/second moment estimates and the shared step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


class Adam:
    """Standard Adam: m, v moment tracking, bias correction, eps outside the root.

    The update applied to each parameter is
    ``delta = -lr * m_hat / (sqrt(v_hat) + eps)``.
    """

    def __init__(
        self,
        parameters: Sequence[Tensor],
        lr: float = 2e-4,
        beta1: float = 0.7,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        names = [p.name for p in parameters]
        if None in names or len(set(names)) != len(names):
            raise DimensionError("Adam needs uniquely named parameters")
        self.parameters = list(parameters)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.state = AdamState(
            m={p.name: np.zeros_like(p.data) for p in parameters},
            v={p.name: np.zeros_like(p.data) for p in parameters},
        )

    def step(self) -> None:
        """Apply one update from the gradients currently on the parameters."""
        self.state.t += 1
        t = self.state.t
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for p in self.parameters:
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if g.shape != p.data.shape:
                raise DimensionError(
                    f"gradient shape {g.shape} does not match parameter {p.name!r} {p.data.shape}"
                )
            m = self.state.m[p.name]
            v = self.state.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.parameters:
            p.grad = None

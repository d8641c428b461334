"""Adam with coupled L2 weight decay, plus the step-decay learning rate
schedule (multiply by gamma every fixed number of optimizer steps).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "adam_step", "lr_at"]


def lr_at(step: int, lr0: float, period: int = 200, gamma: float = 0.1) -> float:
    """Learning rate after `step` completed optimizer steps."""
    if step < 0:
        raise ValueError("step must be >= 0")
    return lr0 * gamma ** (step // period)


@dataclass
class AdamState:
    lr0: float = 1e-3
    weight_decay: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    sched_period: int = 200
    sched_gamma: float = 0.1
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict, grads: dict) -> None:
    """One in-place Adam update; decay is added to the gradient (coupled L2)."""
    lr = lr_at(state.t, state.lr0, state.sched_period, state.sched_gamma)
    state.t += 1
    t = state.t
    for name, theta in params.items():
        g = grads[name] + state.weight_decay * theta
        if name not in state.m:
            state.m[name] = np.zeros_like(theta)
            state.v[name] = np.zeros_like(theta)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + state.eps)

"""Adam and SGD-with-momentum, operating on plain float64 arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0


def adam_step(state: AdamState, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update; returns the new parameter array."""
    if param.shape != grad.shape:
        raise ValueError(f"adam_step: param shape {param.shape} != grad shape {grad.shape}")
    if state.m is None:
        state.m = np.zeros_like(param)
        state.v = np.zeros_like(param)
    elif state.m.shape != param.shape:
        raise ValueError(f"adam_step: state shape {state.m.shape} != param shape {param.shape}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * (grad * grad)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return param - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class MomentumState:
    lr: float
    momentum: float = 0.9
    velocity: np.ndarray | None = None


def sgd_momentum_step(state: MomentumState, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """v <- momentum * v + grad; param <- param - lr * v."""
    if param.shape != grad.shape:
        raise ValueError(f"sgd_momentum_step: param shape {param.shape} != grad shape {grad.shape}")
    if state.velocity is None:
        state.velocity = np.zeros_like(param)
    elif state.velocity.shape != param.shape:
        raise ValueError(
            f"sgd_momentum_step: state shape {state.velocity.shape} != param shape {param.shape}")
    state.velocity = state.momentum * state.velocity + grad
    return param - state.lr * state.velocity


@dataclass
class AdamGroup:
    """Adam across a named parameter dict (one state per tensor)."""

    lr: float
    states: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> dict:
        out = dict(params)
        for name, grad in grads.items():
            state = self.states.get(name)
            if state is None:
                state = self.states[name] = AdamState(lr=self.lr)
            out[name] = adam_step(state, params[name], grad)
        return out


@dataclass
class MomentumGroup:
    """SGD momentum across a named parameter dict."""

    lr: float
    momentum: float = 0.9
    states: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> dict:
        out = dict(params)
        for name, grad in grads.items():
            state = self.states.get(name)
            if state is None:
                state = self.states[name] = MomentumState(lr=self.lr, momentum=self.momentum)
            out[name] = sgd_momentum_step(state, params[name], grad)
        return out

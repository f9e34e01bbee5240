"""ADAM optimizer over the flat parameter vector."""

from __future__ import annotations

import dataclasses

import numpy as np

__all__ = ["AdamState", "adam_update"]


@dataclasses.dataclass
class AdamState:
    """First/second moment estimates plus hyperparameters.

    Defaults are the training configuration used throughout the package:
    lr 1e-4, beta1 0.9, beta2 0.999, eps 1e-8.
    """

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, n_params: int, **hyper) -> "AdamState":
        return cls(
            m=np.zeros(n_params, dtype=np.float64),
            v=np.zeros(n_params, dtype=np.float64),
            **hyper,
        )

    def hyperparameters(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


def adam_update(params, grads, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected ADAM step; returns (new_params, new_state).

    Pure function: the incoming state is not mutated.
    """
    theta = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if theta.shape != g.shape or theta.shape != state.m.shape:
        raise ValueError(
            f"shape mismatch: params {theta.shape}, grads {g.shape}, moments {state.m.shape}"
        )
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_theta = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = dataclasses.replace(state, m=m, v=v, t=t)
    return new_theta, new_state

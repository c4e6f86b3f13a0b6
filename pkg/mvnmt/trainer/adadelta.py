"""
Adadelta with running averages of squared gradients and squared updates.

.. math::

    E[g^2]_t &= \\rho E[g^2]_{t-1} + (1 - \\rho) g_t^2 \\\\
    \\Delta_t &= -\\frac{\\sqrt{E[\\Delta^2]_{t-1} + \\epsilon}}{\\sqrt{E[g^2]_t + \\epsilon}} g_t \\\\
    E[\\Delta^2]_t &= \\rho E[\\Delta^2]_{t-1} + (1 - \\rho) \\Delta_t^2 \\\\
    \\theta_{t+1} &= \\theta_t + lr \\cdot \\Delta_t
"""
from typing import Dict

import numpy as np
from pydantic import BaseModel

from mvnmt.numeric_core.errors import DimensionError


class OptimizerState(BaseModel):
    squared_gradients: Dict[str, np.ndarray]
    squared_updates: Dict[str, np.ndarray]
    rho: float = 0.95
    eps: float = 1e-6

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def zeros_like(
        cls, parameters: Dict[str, np.ndarray], rho: float = 0.95, eps: float = 1e-6
    ) -> "OptimizerState":
        return cls(
            squared_gradients={
                name: np.zeros_like(value) for name, value in parameters.items()
            },
            squared_updates={
                name: np.zeros_like(value) for name, value in parameters.items()
            },
            rho=rho,
            eps=eps,
        )

    def copy_arrays(self) -> "OptimizerState":
        return OptimizerState(
            squared_gradients={k: v.copy() for k, v in self.squared_gradients.items()},
            squared_updates={k: v.copy() for k, v in self.squared_updates.items()},
            rho=self.rho,
            eps=self.eps,
        )


def adadelta_update(
    parameters: Dict[str, np.ndarray],
    gradients: Dict[str, np.ndarray],
    state: OptimizerState,
    lr: float = 1.0,
) -> Dict[str, np.ndarray]:
    """
    Applies one Adadelta step. Parameters without a gradient are treated as
    having a zero gradient, so their accumulators decay.

    :param parameters: current values
    :param gradients: gradients of the loss
    :param state: accumulators, replaced by their updated values
    :param lr: scale applied to the step; the accumulators track the unscaled step
    :return: new parameter values
    """
    rho, eps = state.rho, state.eps
    updated = {}
    for name, value in parameters.items():
        gradient = gradients.get(name)
        if gradient is None:
            gradient = np.zeros_like(value)
        squared_gradient = state.squared_gradients[name]
        squared_update = state.squared_updates[name]
        if gradient.shape != value.shape or squared_gradient.shape != value.shape:
            raise DimensionError("adadelta_update", value.shape, gradient.shape)
        squared_gradient = rho * squared_gradient + (1.0 - rho) * gradient ** 2
        step = -np.sqrt(squared_update + eps) / np.sqrt(squared_gradient + eps) * gradient
        state.squared_gradients[name] = squared_gradient
        state.squared_updates[name] = rho * squared_update + (1.0 - rho) * step ** 2
        updated[name] = value + lr * step
    return updated

"""
Comparison of analytic gradients with central finite differences.
"""
import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from mvnmt.numeric_core.errors import ContractError
from mvnmt.numeric_core.graph import Graph, Node

LossBuilder = Callable[[Graph, Dict[str, Node]], Node]


class ParameterGradientCheck(BaseModel):
    name: str
    checked_elements: int
    max_relative_error: float
    max_absolute_error: float
    worst_index: Tuple[int, ...]
    worst_analytic: float
    worst_numeric: float
    passed: bool


class GradientCheckReport(BaseModel):
    step: float
    relative_tolerance: float
    absolute_tolerance: float
    parameters: List[ParameterGradientCheck]

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.parameters)

    @property
    def worst(self) -> Optional[ParameterGradientCheck]:
        if not self.parameters:
            return None
        return max(self.parameters, key=lambda entry: entry.max_relative_error)

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "parameter": entry.name,
                    "elements": entry.checked_elements,
                    "max_relative_error": entry.max_relative_error,
                    "max_absolute_error": entry.max_absolute_error,
                    "passed": entry.passed,
                }
                for entry in self.parameters
            ]
        )


def _loss_value(loss_builder: LossBuilder, values: Dict[str, np.ndarray]) -> float:
    graph = Graph()
    loss = loss_builder(graph, graph.parameters_from(values))
    if loss.value.size != 1:
        raise ContractError("Gradient check needs a scalar loss")
    return float(loss.value.reshape(()))


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """
    .. math::

        e = \\frac{|a - n|}{\\max(|a|, |n|)}

    Pairs that are both exactly zero have error zero.
    """
    difference = np.abs(analytic - numeric)
    denominator = np.maximum(np.abs(analytic), np.abs(numeric))
    return np.divide(
        difference,
        denominator,
        out=np.zeros_like(difference),
        where=denominator > 0,
    )


def check_gradient(
    loss_builder: LossBuilder,
    parameters: Dict[str, np.ndarray],
    step: float = 1e-5,
    relative_tolerance: float = 1e-4,
    absolute_tolerance: float = 1e-8,
    max_elements_per_parameter: Optional[int] = None,
    seed: int = 0,
) -> GradientCheckReport:
    """
    Checks the gradient of a loss against central differences.

    The loss is rebuilt on a fresh graph for every perturbation, so
    ``loss_builder`` must be a pure function of the parameter values. An
    element passes when its relative error is below ``relative_tolerance`` or
    its absolute error is below ``absolute_tolerance``.

    :param loss_builder: builds the scalar loss from parameter nodes
    :param parameters: parameter values by name
    :param step: finite difference step
    :param relative_tolerance: maximum relative error
    :param absolute_tolerance: fallback for elements with tiny gradients
    :param max_elements_per_parameter: check a random subset of elements
    :param seed: seed of the subset selection
    :return: per parameter errors
    """
    values = {
        name: np.array(value, dtype=np.float64) for name, value in parameters.items()
    }
    graph = Graph()
    loss = loss_builder(graph, graph.parameters_from(values))
    analytic = graph.backward(loss)
    rng = np.random.default_rng(seed)

    entries = []
    for name, value in values.items():
        gradient = analytic.get(name, np.zeros_like(value))
        flat_indices = np.arange(value.size)
        limit = max_elements_per_parameter
        if limit is not None and value.size > limit:
            flat_indices = np.sort(rng.choice(value.size, limit, replace=False))

        numeric = np.empty(flat_indices.size)
        for position, flat_index in enumerate(flat_indices):
            index = np.unravel_index(flat_index, value.shape)
            original = value[index]
            value[index] = original + step
            upper = _loss_value(loss_builder, values)
            value[index] = original - step
            lower = _loss_value(loss_builder, values)
            value[index] = original
            numeric[position] = (upper - lower) / (2.0 * step)

        checked = gradient.reshape(-1)[flat_indices]
        relative = relative_error(checked, numeric)
        absolute = np.abs(checked - numeric)
        element_passed = (relative < relative_tolerance) | (absolute < absolute_tolerance)
        worst = int(np.argmax(relative)) if relative.size else 0
        entry = ParameterGradientCheck(
            name=name,
            checked_elements=int(flat_indices.size),
            max_relative_error=float(relative.max()) if relative.size else 0.0,
            max_absolute_error=float(absolute.max()) if absolute.size else 0.0,
            worst_index=tuple(
                int(i) for i in np.unravel_index(flat_indices[worst], value.shape)
            )
            if relative.size
            else (),
            worst_analytic=float(checked[worst]) if relative.size else 0.0,
            worst_numeric=float(numeric[worst]) if relative.size else 0.0,
            passed=bool(element_passed.all()),
        )
        if not entry.passed:
            logging.warning(
                "Gradient check failed for %s: relative error %.3e at %s",
                name,
                entry.max_relative_error,
                entry.worst_index,
            )
        entries.append(entry)

    return GradientCheckReport(
        step=step,
        relative_tolerance=relative_tolerance,
        absolute_tolerance=absolute_tolerance,
        parameters=entries,
    )

"""
Reverse-mode differentiation over numpy arrays.

Every operation appends a :class:`Node` to its :class:`Graph`. Nodes are kept in
creation order, which is a topological order, so the backward sweep visits the
recorded list in reverse and applies the chain rule exactly once per edge.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mvnmt.numeric_core.errors import ContractError

BackwardFunction = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Node:
    """
    One value in a computation graph.

    :param graph: graph owning the node
    :param index: position in the graph's topological order
    :param operation: name of the operation that produced the value
    :param inputs: nodes the value was computed from
    :param value: the forward value, always float64
    :param backward: maps the gradient of the output to gradients of the inputs
    :param requires_grad: whether a parameter is upstream of the node
    :param name: parameter name, only set for parameter nodes
    """

    __slots__ = (
        "graph",
        "index",
        "operation",
        "inputs",
        "value",
        "backward",
        "requires_grad",
        "name",
    )

    def __init__(
        self,
        graph: "Graph",
        index: int,
        operation: str,
        inputs: Tuple["Node", ...],
        value: np.ndarray,
        backward: Optional[BackwardFunction],
        requires_grad: bool,
        name: Optional[str] = None,
    ):
        self.graph = graph
        self.index = index
        self.operation = operation
        self.inputs = inputs
        self.value = value
        self.backward = backward
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return "Node({}, {}, shape={})".format(self.index, self.operation, self.shape)


class Graph:
    """
    Records operations so that gradients of a scalar can be computed with
    respect to every named parameter.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.parameters: Dict[str, Node] = {}

    def _append(
        self,
        operation: str,
        inputs: Tuple[Node, ...],
        value: np.ndarray,
        backward: Optional[BackwardFunction],
        requires_grad: bool,
        name: Optional[str] = None,
    ) -> Node:
        node = Node(
            self,
            len(self.nodes),
            operation,
            inputs,
            value,
            backward,
            requires_grad,
            name,
        )
        self.nodes.append(node)
        return node

    def parameter(self, name: str, value: np.ndarray) -> Node:
        """Registers a named leaf that gradients are reported for."""
        if name in self.parameters:
            raise ContractError("Parameter {} is already registered".format(name))
        node = self._append(
            "parameter", (), np.array(value, dtype=np.float64), None, True, name
        )
        self.parameters[name] = node
        return node

    def parameters_from(self, values: Dict[str, np.ndarray]) -> Dict[str, Node]:
        return {name: self.parameter(name, value) for name, value in values.items()}

    def constant(self, value) -> Node:
        return self._append(
            "constant", (), np.asarray(value, dtype=np.float64), None, False
        )

    def record(
        self,
        operation: str,
        inputs: Sequence[Node],
        value: np.ndarray,
        backward: BackwardFunction,
    ) -> Node:
        inputs = tuple(inputs)
        for node in inputs:
            if node.graph is not self:
                raise ContractError(
                    "Operation {} mixes nodes of different graphs".format(operation)
                )
        requires_grad = any(node.requires_grad for node in inputs)
        return self._append(
            operation,
            inputs,
            np.asarray(value, dtype=np.float64),
            backward if requires_grad else None,
            requires_grad,
        )

    def backward(self, loss: Node) -> Dict[str, np.ndarray]:
        """
        Computes the gradient of a scalar loss with respect to every parameter
        the loss depends on.

        :param loss: node holding a single value
        :return: gradient per parameter name, same shape as the parameter
        """
        if loss.graph is not self:
            raise ContractError("Loss node belongs to another graph")
        if loss.value.size != 1:
            raise ContractError(
                "Backward needs a scalar loss, got shape {}".format(loss.shape)
            )

        reachable = np.zeros(loss.index + 1, dtype=bool)
        reachable[loss.index] = True
        for node in reversed(self.nodes[: loss.index + 1]):
            if reachable[node.index] and node.requires_grad:
                for source in node.inputs:
                    reachable[source.index] = True

        gradients: Dict[int, np.ndarray] = {loss.index: np.ones_like(loss.value)}
        result: Dict[str, np.ndarray] = {}
        for node in reversed(self.nodes[: loss.index + 1]):
            if not (reachable[node.index] and node.requires_grad):
                continue
            gradient = gradients.pop(node.index, None)
            if node.name is not None:
                result[node.name] = (
                    np.zeros_like(node.value) if gradient is None else gradient
                )
                continue
            if gradient is None:
                continue
            for source, source_gradient in zip(node.inputs, node.backward(gradient)):
                if source_gradient is None or not source.requires_grad:
                    continue
                if source_gradient.shape != source.value.shape:
                    raise ContractError(
                        "Operation {} produced a gradient of shape {} for an input "
                        "of shape {}".format(
                            node.operation, source_gradient.shape, source.value.shape
                        )
                    )
                previous = gradients.get(source.index)
                gradients[source.index] = (
                    source_gradient if previous is None else previous + source_gradient
                )

        logging.debug(
            "Backward pass over %d nodes produced %d parameter gradients",
            loss.index + 1,
            len(result),
        )
        return {name: result[name] for name in self.parameters if name in result}


def backward(loss: Node) -> Dict[str, np.ndarray]:
    return loss.graph.backward(loss)

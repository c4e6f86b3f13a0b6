"""
Differentiable primitives. Each function computes its forward value with numpy
and registers a closure on the graph that maps the output gradient to input
gradients.
"""
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.special import expit, logsumexp

from mvnmt.numeric_core.errors import ContractError, DimensionError
from mvnmt.numeric_core.graph import Graph, Node

RowWeights = Union[Node, np.ndarray]


def _graph(*nodes: Node) -> Graph:
    return nodes[0].graph


def matmul(a: Node, b: Node) -> Node:
    """
    Matrix product of a 2-d node with a 2-d or 1-d node.

    .. math::

        \\frac{\\partial L}{\\partial A} = G B^T, \\quad
        \\frac{\\partial L}{\\partial B} = A^T G
    """
    if a.value.ndim != 2 or b.value.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", a.shape, b.shape)
    a_value, b_value = a.value, b.value

    def backward(gradient):
        if b_value.ndim == 1:
            return np.outer(gradient, b_value), a_value.T @ gradient
        return gradient @ b_value.T, a_value.T @ gradient

    return _graph(a).record("matmul", (a, b), a_value @ b_value, backward)


def linear(x: Node, weight: Node) -> Node:
    """Applies a weight stored as (out, in) to the rows of ``x``: x W^T."""
    if weight.value.ndim != 2 or x.value.ndim not in (1, 2):
        raise DimensionError("linear", x.shape, weight.shape)
    if x.shape[-1] != weight.shape[1]:
        raise DimensionError("linear", x.shape, weight.shape)
    x_value, w_value = x.value, weight.value

    def backward(gradient):
        if x_value.ndim == 1:
            return gradient @ w_value, np.outer(gradient, x_value)
        return gradient @ w_value, gradient.T @ x_value

    return _graph(x).record("linear", (x, weight), x_value @ w_value.T, backward)


def add(a: Node, b: Node) -> Node:
    """Elementwise sum; a 1-d ``b`` is added to every row of a 2-d ``a``."""
    if a.shape == b.shape:

        def backward(gradient):
            return gradient, gradient

    elif a.value.ndim == 2 and b.value.ndim == 1 and a.shape[1] == b.shape[0]:

        def backward(gradient):
            return gradient, gradient.sum(axis=0)

    else:
        raise DimensionError("add", a.shape, b.shape)
    return _graph(a).record("add", (a, b), a.value + b.value, backward)


def sub(a: Node, b: Node) -> Node:
    if a.shape != b.shape:
        raise DimensionError("sub", a.shape, b.shape)
    return _graph(a).record(
        "sub", (a, b), a.value - b.value, lambda gradient: (gradient, -gradient)
    )


def mul(a: Node, b: Node) -> Node:
    if a.shape != b.shape:
        raise DimensionError("mul", a.shape, b.shape)
    a_value, b_value = a.value, b.value
    return _graph(a).record(
        "mul",
        (a, b),
        a_value * b_value,
        lambda gradient: (gradient * b_value, gradient * a_value),
    )


def scale(a: Node, factor: float) -> Node:
    return _graph(a).record(
        "scale", (a,), a.value * factor, lambda gradient: (gradient * factor,)
    )


def add_scalar(a: Node, constant: float) -> Node:
    return _graph(a).record(
        "add_scalar", (a,), a.value + constant, lambda gradient: (gradient,)
    )


def one_minus(a: Node) -> Node:
    return _graph(a).record(
        "one_minus", (a,), 1.0 - a.value, lambda gradient: (-gradient,)
    )


def add_n(nodes: Sequence[Node]) -> Node:
    """Sums equally shaped nodes left to right."""
    if not nodes:
        raise ContractError("add_n needs at least one node")
    for node in nodes[1:]:
        if node.shape != nodes[0].shape:
            raise DimensionError("add_n", nodes[0].shape, node.shape)
    value = nodes[0].value.copy()
    for node in nodes[1:]:
        value = value + node.value
    count = len(nodes)
    return _graph(*nodes).record(
        "add_n", nodes, value, lambda gradient: (gradient,) * count
    )


def exp(a: Node) -> Node:
    value = np.exp(a.value)
    return _graph(a).record("exp", (a,), value, lambda gradient: (gradient * value,))


def tanh(a: Node) -> Node:
    value = np.tanh(a.value)
    return _graph(a).record(
        "tanh", (a,), value, lambda gradient: (gradient * (1.0 - value * value),)
    )


def sigmoid(a: Node) -> Node:
    value = expit(a.value)
    return _graph(a).record(
        "sigmoid", (a,), value, lambda gradient: (gradient * value * (1.0 - value),)
    )


def clip(a: Node, lower: float, upper: float) -> Node:
    """Clamps values; the gradient is zero where the clamp is active."""
    inside = (a.value >= lower) & (a.value <= upper)
    return _graph(a).record(
        "clip",
        (a,),
        np.clip(a.value, lower, upper),
        lambda gradient: (np.where(inside, gradient, 0.0),),
    )


def _check_mask(operation: str, a: Node, mask: Optional[np.ndarray]):
    if mask is None:
        return None
    mask = np.asarray(mask) > 0
    if mask.shape != a.shape:
        raise DimensionError(operation, a.shape, mask.shape)
    if not mask.any(axis=-1).all():
        raise ContractError("{} received a fully masked row".format(operation))
    return mask


def softmax(a: Node, mask: Optional[np.ndarray] = None) -> Node:
    """
    Softmax over the last axis. Masked entries are treated as scores of
    minus infinity and receive zero probability.

    .. math::

        \\frac{\\partial L}{\\partial a} = p \\odot (g - \\langle g, p \\rangle)
    """
    mask = _check_mask("softmax", a, mask)
    scores = a.value if mask is None else np.where(mask, a.value, -np.inf)
    shifted = np.exp(scores - scores.max(axis=-1, keepdims=True))
    value = shifted / shifted.sum(axis=-1, keepdims=True)

    def backward(gradient):
        return (value * (gradient - (gradient * value).sum(axis=-1, keepdims=True)),)

    return _graph(a).record("softmax", (a,), value, backward)


def log_softmax(a: Node) -> Node:
    value = a.value - logsumexp(a.value, axis=-1, keepdims=True)
    probabilities = np.exp(value)

    def backward(gradient):
        return (gradient - probabilities * gradient.sum(axis=-1, keepdims=True),)

    return _graph(a).record("log_softmax", (a,), value, backward)


def reduce_sum(a: Node, axis: Optional[int] = None) -> Node:
    shape = a.shape

    def backward(gradient):
        if axis is None:
            return (np.broadcast_to(gradient, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(gradient, axis), shape).copy(),)

    return _graph(a).record("reduce_sum", (a,), a.value.sum(axis=axis), backward)


def reduce_mean(a: Node, axis: Optional[int] = None) -> Node:
    count = a.value.size if axis is None else a.shape[axis]
    return scale(reduce_sum(a, axis), 1.0 / count)


def concat(nodes: Sequence[Node], axis: int = -1) -> Node:
    if not nodes:
        raise ContractError("concat needs at least one node")
    try:
        value = np.concatenate([node.value for node in nodes], axis=axis)
    except ValueError:
        raise DimensionError("concat", *[node.shape for node in nodes])
    boundaries = np.cumsum([node.shape[axis] for node in nodes])[:-1]

    def backward(gradient):
        return tuple(np.split(gradient, boundaries, axis=axis))

    return _graph(*nodes).record("concat", nodes, value, backward)


def slice_axis(a: Node, start: int, stop: int, axis: int = -1) -> Node:
    if not 0 <= start < stop <= a.shape[axis]:
        raise DimensionError("slice_axis", a.shape, (start, stop))
    index = [slice(None)] * a.value.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    shape = a.shape

    def backward(gradient):
        result = np.zeros(shape)
        result[index] = gradient
        return (result,)

    return _graph(a).record("slice_axis", (a,), a.value[index], backward)


def embedding(table: Node, ids: Sequence[int]) -> Node:
    """
    Looks up columns of an embedding table stored as (d_emb, vocabulary).

    :return: node of shape (len(ids), d_emb)
    """
    ids = np.asarray(ids, dtype=np.int64)
    vocabulary = table.shape[1]
    if ids.ndim != 1:
        raise DimensionError("embedding", table.shape, ids.shape)
    if ids.size and (ids.min() < 0 or ids.max() >= vocabulary):
        raise IndexError(
            "Token id out of range for a vocabulary of size {}".format(vocabulary)
        )

    def backward(gradient):
        result = np.zeros(table.shape)
        np.add.at(result.T, ids, gradient)
        return (result,)

    return _graph(table).record("embedding", (table,), table.value[:, ids].T, backward)


def pick(a: Node, ids: Sequence[int]) -> Node:
    """Selects ``a[b, ids[b]]`` for every row ``b``."""
    ids = np.asarray(ids, dtype=np.int64)
    if a.value.ndim != 2 or ids.shape != (a.shape[0],):
        raise DimensionError("pick", a.shape, ids.shape)
    rows = np.arange(a.shape[0])
    shape = a.shape

    def backward(gradient):
        result = np.zeros(shape)
        np.add.at(result, (rows, ids), gradient)
        return (result,)

    return _graph(a).record("pick", (a,), a.value[rows, ids], backward)


def scale_rows(x: Node, weights: RowWeights) -> Node:
    """
    Multiplies every row of ``x`` by one weight. Weights given as an array are
    constants, weights given as a node of shape (B,) or (B, 1) are differentiated.
    """
    rows = x.shape[0]
    if isinstance(weights, Node):
        weight_node: Optional[Node] = weights
        w_value = weights.value.reshape(-1)
    else:
        weight_node = None
        w_value = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w_value.shape != (rows,):
        raise DimensionError(
            "scale_rows",
            x.shape,
            weight_node.shape if weight_node is not None else w_value.shape,
        )
    expanded = w_value.reshape((rows,) + (1,) * (x.value.ndim - 1))
    x_value = x.value

    def backward(gradient):
        x_gradient = gradient * expanded
        if weight_node is None:
            return (x_gradient,)
        w_gradient = (gradient * x_value).reshape(rows, -1).sum(axis=1)
        return x_gradient, w_gradient.reshape(weight_node.shape)

    inputs: List[Node] = [x] if weight_node is None else [x, weight_node]
    return _graph(x).record("scale_rows", inputs, x_value * expanded, backward)


def blend_rows(mask: np.ndarray, new: Node, old: Node) -> Node:
    """Takes rows of ``new`` where the mask is set and rows of ``old`` elsewhere."""
    if new.shape != old.shape:
        raise DimensionError("blend_rows", new.shape, old.shape)
    keep = (np.asarray(mask).reshape(-1) > 0).reshape(
        (new.shape[0],) + (1,) * (new.value.ndim - 1)
    )
    if keep.shape[0] != new.shape[0]:
        raise DimensionError("blend_rows", new.shape, np.asarray(mask).shape)

    def backward(gradient):
        return np.where(keep, gradient, 0.0), np.where(keep, 0.0, gradient)

    return _graph(new).record(
        "blend_rows", (new, old), np.where(keep, new.value, old.value), backward
    )

"""
Gated recurrent unit with a reset gate r and an update gate o:

.. math::

    r &= \\sigma(W_r x + U_r h + b_r) \\\\
    o &= \\sigma(W_o x + U_o h + b_o) \\\\
    \\tilde{h} &= \\tanh(W x + r \\odot (U h) + b) \\\\
    h' &= (1 - o) \\odot \\tilde{h} + o \\odot h
"""
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel

from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import DimensionError
from mvnmt.numeric_core.graph import Node


class GruParameters(BaseModel):
    W: Node
    W_r: Node
    W_o: Node
    U: Node
    U_r: Node
    U_o: Node
    b: Optional[Node] = None
    b_r: Optional[Node] = None
    b_o: Optional[Node] = None

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def from_nodes(cls, nodes: Dict[str, Node], prefix: str) -> "GruParameters":
        fields = {}
        for gate in ("W", "W_r", "W_o", "U", "U_r", "U_o", "b", "b_r", "b_o"):
            name = "{}.{}".format(prefix, gate)
            if name in nodes:
                fields[gate] = nodes[name]
        return cls(**fields)

    @property
    def hidden_size(self) -> int:
        return self.U.shape[0]


def _affine(x: Node, weight: Node, bias: Optional[Node]) -> Node:
    result = ops.linear(x, weight)
    return result if bias is None else ops.add(result, bias)


def gru_step(previous: Node, inputs: Node, parameters: GruParameters) -> Node:
    """
    One recurrent update for every row of the batch.

    :param previous: hidden state (B, d_h)
    :param inputs: input rows (B, d_in)
    :param parameters: gate weights
    :return: next hidden state (B, d_h)
    """
    if previous.shape[-1] != parameters.hidden_size:
        raise DimensionError("gru_step", previous.shape, parameters.U.shape)
    if inputs.shape[-1] != parameters.W.shape[1]:
        raise DimensionError("gru_step", inputs.shape, parameters.W.shape)
    reset = ops.sigmoid(
        ops.add(
            _affine(inputs, parameters.W_r, parameters.b_r),
            ops.linear(previous, parameters.U_r),
        )
    )
    update = ops.sigmoid(
        ops.add(
            _affine(inputs, parameters.W_o, parameters.b_o),
            ops.linear(previous, parameters.U_o),
        )
    )
    candidate = ops.tanh(
        ops.add(
            _affine(inputs, parameters.W, parameters.b),
            ops.mul(reset, ops.linear(previous, parameters.U)),
        )
    )
    return ops.add(ops.mul(ops.one_minus(update), candidate), ops.mul(update, previous))


def run_gru(
    inputs: List[Node],
    mask: np.ndarray,
    parameters: GruParameters,
    reverse: bool = False,
) -> List[Node]:
    """
    Runs a GRU over a time-major list of inputs from a zero state. Rows whose
    mask is 0 at a step keep their previous state.
    """
    graph = inputs[0].graph
    state = graph.constant(np.zeros((inputs[0].shape[0], parameters.hidden_size)))
    states: List[Optional[Node]] = [None] * len(inputs)
    steps = range(len(inputs) - 1, -1, -1) if reverse else range(len(inputs))
    for t in steps:
        state = ops.blend_rows(mask[t], gru_step(state, inputs[t], parameters), state)
        states[t] = state
    return states


def encode_bidirectional(
    inputs: List[Node],
    mask: np.ndarray,
    forward: GruParameters,
    backward: GruParameters,
) -> List[Node]:
    """
    Concatenates a left-to-right and a right-to-left GRU pass per position.

    :param inputs: time-major input rows, each (B, d_in)
    :param mask: (T, B) mask of real positions
    :return: time-major states, each (B, d_forward + d_backward)
    """
    if len(inputs) != mask.shape[0]:
        raise DimensionError("encode_bidirectional", (len(inputs),), mask.shape)
    forward_states = run_gru(inputs, mask, forward)
    backward_states = run_gru(inputs, mask, backward, reverse=True)
    return [
        ops.concat([left, right], axis=-1)
        for left, right in zip(forward_states, backward_states)
    ]

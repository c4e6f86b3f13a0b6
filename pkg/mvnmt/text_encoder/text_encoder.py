from typing import List

import numpy as np
from pydantic import BaseModel

from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import ContractError, DimensionError
from mvnmt.numeric_core.graph import Node
from mvnmt.text_encoder.gru import GruParameters, encode_bidirectional
from mvnmt.text_encoder.sequence_batch import SequenceBatch


class EncoderOutput(BaseModel):
    """
    Annotations of a batch of sentences.

    :param states: one (B, d_h) node per time step
    :param mask: (T, B) mask of real positions
    :param pooled: (B, d_h) mean of the states over real positions
    """

    states: List[Node]
    mask: np.ndarray
    pooled: Node

    class Config:
        arbitrary_types_allowed = True

    def states_of(self, row: int) -> np.ndarray:
        """Returns the (T_row, d_h) annotation matrix of one sentence."""
        length = int(self.mask[:, row].sum())
        return np.stack([state.value[row] for state in self.states[:length]])


def embed(table: Node, batch: SequenceBatch) -> List[Node]:
    """Looks up the embeddings of every time step of a batch."""
    return [ops.embedding(table, batch.ids[t]) for t in range(batch.steps)]


def mean_pool(states: List[Node], mask: np.ndarray) -> Node:
    """
    Averages states over the real positions of every row.

    .. math::

        h = \\frac{1}{T} \\sum_{t=1}^{T} h_t
    """
    if not states:
        raise ContractError("Cannot pool an empty sequence")
    if len(states) != mask.shape[0]:
        raise DimensionError("mean_pool", (len(states),), mask.shape)
    lengths = mask.sum(axis=0)
    if np.any(lengths == 0):
        raise ContractError("Cannot pool a sequence without real positions")
    return ops.add_n(
        [ops.scale_rows(state, mask[t] / lengths) for t, state in enumerate(states)]
    )


def encode_text(
    embedding_table: Node,
    batch: SequenceBatch,
    forward: GruParameters,
    backward: GruParameters,
) -> EncoderOutput:
    states = encode_bidirectional(
        embed(embedding_table, batch), batch.mask, forward, backward
    )
    return EncoderOutput(
        states=states, mask=batch.mask, pooled=mean_pool(states, batch.mask)
    )

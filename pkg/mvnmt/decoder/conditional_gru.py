"""
Conditional GRU decoder with attention and latent injection.

A step chains a first GRU over the previous target word, attention over the
source annotations, a second GRU over the context that also reads the
projected latent, and a softmax over the target vocabulary. The decoder
has no bias terms.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import ContractError, DimensionError
from mvnmt.numeric_core.graph import Node
from mvnmt.text_encoder.gru import GruParameters
from mvnmt.text_encoder.sequence_batch import SequenceBatch
from mvnmt.text_encoder.text_encoder import EncoderOutput
from mvnmt.text_encoder.vocabulary import EOS_ID


class AttentionParameters(BaseModel):
    W_catt: Node
    W_att: Node
    U_att: Node

    class Config:
        arbitrary_types_allowed = True


class OutputParameters(BaseModel):
    L_u: Node
    L_s: Node
    L_x: Node

    class Config:
        arbitrary_types_allowed = True


class DecoderParameters(BaseModel):
    """
    :param V: latent injection into the second GRU candidate, None without a latent
    """

    W_init: Node
    target_embedding: Node
    gru1: GruParameters
    attention: AttentionParameters
    gru2: GruParameters
    V: Optional[Node] = None
    V_r: Optional[Node] = None
    V_o: Optional[Node] = None
    output: OutputParameters

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def from_nodes(
        cls, nodes: Dict[str, Node], latent_components: Sequence[str] = ()
    ) -> "DecoderParameters":
        injection = {}
        for gate in ("V", "V_r", "V_o"):
            blocks = [
                nodes["decoder.gru2.{}.{}".format(gate, c)] for c in latent_components
            ]
            if blocks:
                injection[gate] = (
                    blocks[0] if len(blocks) == 1 else ops.concat(blocks, axis=1)
                )
        return cls(
            W_init=nodes["decoder.W_init"],
            target_embedding=nodes["target_embedding"],
            gru1=GruParameters.from_nodes(nodes, "decoder.gru1"),
            attention=AttentionParameters(
                **{
                    key: nodes["decoder.attention." + key]
                    for key in ("W_catt", "W_att", "U_att")
                }
            ),
            gru2=GruParameters.from_nodes(nodes, "decoder.gru2"),
            output=OutputParameters(
                **{key: nodes["decoder.output." + key] for key in ("L_u", "L_s", "L_x")}
            ),
            **injection,
        )

    @property
    def hidden_size(self) -> int:
        return self.W_init.shape[0]


class AttentionMemory(BaseModel):
    """Source annotations with their attention projections computed once."""

    states: List[Node]
    projected: List[Node]
    mask: np.ndarray

    class Config:
        arbitrary_types_allowed = True


class DecoderState(BaseModel):
    s: Node
    s_intermediate: Node
    context: Node
    attention: Node

    class Config:
        arbitrary_types_allowed = True


class OutputDistribution(BaseModel):
    log_probs: Node

    class Config:
        arbitrary_types_allowed = True


def initial_state(h_f: Node, parameters: DecoderParameters) -> Node:
    """s_0 = tanh(W_init h_f)"""
    return ops.tanh(ops.linear(h_f, parameters.W_init))


def prepare_attention(
    encoder: EncoderOutput, parameters: DecoderParameters
) -> AttentionMemory:
    return AttentionMemory(
        states=encoder.states,
        projected=[
            ops.linear(state, parameters.attention.W_catt) for state in encoder.states
        ],
        mask=encoder.mask,
    )


def gru1_step(
    s_prev: Node, y_prev: Node, parameters: DecoderParameters
) -> Tuple[Node, Node]:
    """
    First GRU over the embedding of the previous target word.

    :return: intermediate state s' and its update gate o'
    """
    gru = parameters.gru1
    if s_prev.shape[-1] != gru.hidden_size or y_prev.shape[-1] != gru.W.shape[1]:
        raise DimensionError("gru1_step", s_prev.shape, y_prev.shape)
    reset = ops.sigmoid(
        ops.add(ops.linear(y_prev, gru.W_r), ops.linear(s_prev, gru.U_r))
    )
    update = ops.sigmoid(
        ops.add(ops.linear(y_prev, gru.W_o), ops.linear(s_prev, gru.U_o))
    )
    candidate = ops.tanh(
        ops.add(ops.linear(y_prev, gru.W), ops.mul(reset, ops.linear(s_prev, gru.U)))
    )
    s_intermediate = ops.add(
        ops.mul(ops.one_minus(update), candidate), ops.mul(update, s_prev)
    )
    return s_intermediate, update


def attend(
    s_intermediate: Node, memory: AttentionMemory, parameters: DecoderParameters
) -> Tuple[Node, Node]:
    """
    .. math::

        e_{ij} &= U_{att} \\tanh(W_{catt} h_i + W_{att} s'_j) \\\\
        \\alpha_{ij} &= \\mathrm{softmax}_i(e_{ij}) \\\\
        c_j &= \\tanh(\\sum_i \\alpha_{ij} h_i)

    Padding positions get zero weight.

    :return: context (B, d_h) and attention weights (B, T_f)
    """
    if not memory.states:
        raise ContractError("Attention needs at least one source position")
    query = ops.linear(s_intermediate, parameters.attention.W_att)
    scores = ops.concat(
        [
            ops.linear(ops.tanh(ops.add(projected, query)), parameters.attention.U_att)
            for projected in memory.projected
        ],
        axis=-1,
    )
    alpha = ops.softmax(scores, mask=memory.mask.T)
    weighted = [
        ops.scale_rows(state, ops.slice_axis(alpha, i, i + 1, axis=-1))
        for i, state in enumerate(memory.states)
    ]
    return ops.tanh(ops.add_n(weighted)), alpha


def gru2_step(
    s_intermediate: Node,
    context: Node,
    h_e_target: Optional[Node],
    update_intermediate: Node,
    parameters: DecoderParameters,
    gate_fix: bool = False,
) -> Node:
    """
    Second GRU over the attention context with the latent injected in every
    gate.

    .. math::

        r &= \\sigma(W_r c + U_r s' + V_r h'_e) \\\\
        o &= \\sigma(W_o c + U_o s' + V_o h'_e) \\\\
        \\tilde{s} &= \\tanh(W c + r \\odot (U s') + V h'_e) \\\\
        s &= (1 - o') \\odot \\tilde{s} + o \\odot s'

    With ``gate_fix`` the first factor uses o instead of the first GRU's o'.
    """
    gru = parameters.gru2
    if context.shape != s_intermediate.shape:
        raise DimensionError("gru2_step", s_intermediate.shape, context.shape)
    injected = h_e_target is not None and parameters.V is not None
    if injected and h_e_target.shape[-1] != parameters.V.shape[1]:
        raise DimensionError("gru2_step", h_e_target.shape, parameters.V.shape)

    def pre_activation(W, U, V, reset=None):
        recurrent = ops.linear(s_intermediate, U)
        if reset is not None:
            recurrent = ops.mul(reset, recurrent)
        terms = [ops.linear(context, W), recurrent]
        if injected:
            terms.append(ops.linear(h_e_target, V))
        return ops.add_n(terms)

    reset = ops.sigmoid(pre_activation(gru.W_r, gru.U_r, parameters.V_r))
    update = ops.sigmoid(pre_activation(gru.W_o, gru.U_o, parameters.V_o))
    candidate = ops.tanh(pre_activation(gru.W, gru.U, parameters.V, reset=reset))
    keep = update if gate_fix else update_intermediate
    return ops.add(
        ops.mul(ops.one_minus(keep), candidate), ops.mul(update, s_intermediate)
    )


def output_logits(
    y_prev: Node, s: Node, context: Node, parameters: DecoderParameters
) -> OutputDistribution:
    """
    .. math::

        u_j = L_u \\tanh(E[y_{j-1}] + L_s s_j + L_x c_j)
    """
    out = parameters.output
    hidden = ops.tanh(
        ops.add_n([y_prev, ops.linear(s, out.L_s), ops.linear(context, out.L_x)])
    )
    return OutputDistribution(log_probs=ops.log_softmax(ops.linear(hidden, out.L_u)))


def decoder_step(
    s_prev: Node,
    y_prev: Node,
    memory: AttentionMemory,
    h_e_target: Optional[Node],
    parameters: DecoderParameters,
    gate_fix: bool = False,
) -> Tuple[DecoderState, OutputDistribution]:
    s_intermediate, update_intermediate = gru1_step(s_prev, y_prev, parameters)
    context, alpha = attend(s_intermediate, memory, parameters)
    s = gru2_step(
        s_intermediate, context, h_e_target, update_intermediate, parameters, gate_fix
    )
    state = DecoderState(
        s=s, s_intermediate=s_intermediate, context=context, attention=alpha
    )
    return state, output_logits(y_prev, s, context, parameters)


def previous_word_embeddings(
    target: SequenceBatch, parameters: DecoderParameters
) -> List[Node]:
    """Embeddings of y_{j-1} for every step; the first step reads a zero vector."""
    table = parameters.target_embedding
    first = table.graph.constant(np.zeros((target.size, table.shape[0])))
    rest = [ops.embedding(table, target.ids[j - 1]) for j in range(1, target.steps)]
    return [first] + rest


def decode_teacher_forced(
    encoder: EncoderOutput,
    h_e_target: Optional[Node],
    target: SequenceBatch,
    parameters: DecoderParameters,
    gate_fix: bool = False,
) -> Node:
    """
    Log-likelihood of every target sentence under teacher forcing.

    :param encoder: source annotations and pooled source summary
    :param h_e_target: projected latent per sentence, None without a latent
    :param target: target sentences ending with the end-of-sentence id
    :return: (B,) summed log-probabilities of the real target tokens
    """
    if encoder.pooled.shape[0] != target.size:
        raise DimensionError(
            "decode_teacher_forced", encoder.pooled.shape, target.ids.shape
        )
    for sequence in target.sequences():
        if sequence[-1] != EOS_ID:
            raise ContractError("Target sentences must end with the end-of-sentence id")
    memory = prepare_attention(encoder, parameters)
    s = initial_state(encoder.pooled, parameters)
    graph = s.graph
    terms = []
    for j, y_prev in enumerate(previous_word_embeddings(target, parameters)):
        state, distribution = decoder_step(
            s, y_prev, memory, h_e_target, parameters, gate_fix
        )
        s = state.s
        chosen = ops.pick(distribution.log_probs, target.ids[j])
        terms.append(ops.mul(chosen, graph.constant(target.mask[j])))
    return ops.add_n(terms)

"""
Beam search from the prior mean.

Live hypotheses are decoded together as the rows of one batch. After every
step the best ``beam_size - finished`` extensions survive; an extension ending
in the end-of-sentence id retires into the finished pool. Ranking prefers the
higher log probability, then the shorter sequence, then smaller token ids.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from mvnmt.decoder.conditional_gru import AttentionMemory, decoder_step
from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import ContractError
from mvnmt.numeric_core.graph import Graph
from mvnmt.text_encoder.sequence_batch import SequenceBatch
from mvnmt.text_encoder.vocabulary import EOS_ID
from mvnmt.trainer.model import MultimodalVnmt


class Hypothesis(BaseModel):
    """
    :param tokens: chosen ids, ending with the end-of-sentence id when finished
    :param log_prob: sum of the chosen per-step log probabilities
    :param state: decoder state after the last token
    """

    tokens: Tuple[int, ...]
    log_prob: float
    finished: bool = False
    state: Optional[np.ndarray] = None

    class Config:
        arbitrary_types_allowed = True

    def score(self, normalize_length: bool = False) -> float:
        if normalize_length and self.tokens:
            return self.log_prob / len(self.tokens)
        return self.log_prob

    def ranking_key(self, normalize_length: bool = False):
        return -self.score(normalize_length), len(self.tokens), self.tokens


class SourceMemory(BaseModel):
    """Encoded source of one sentence, stored as arrays."""

    states: List[np.ndarray]
    projected: List[np.ndarray]
    initial_state: np.ndarray
    h_e_target: Optional[np.ndarray] = None

    class Config:
        arbitrary_types_allowed = True


def encode_for_translation(
    model: MultimodalVnmt, parameters: dict, source: Sequence[int]
) -> SourceMemory:
    graph = Graph()
    context = model.translation_context(
        graph, parameters, SequenceBatch.from_sequences([list(source)])
    )
    return SourceMemory(
        states=[state.value for state in context.memory.states],
        projected=[projected.value for projected in context.memory.projected],
        initial_state=context.initial_state.value,
        h_e_target=None if context.h_e_target is None else context.h_e_target.value,
    )


def next_word_log_probs(
    model: MultimodalVnmt,
    parameters: dict,
    memory: SourceMemory,
    states: np.ndarray,
    previous: Optional[np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One decoder step for ``k`` hypotheses of the same source.

    :param states: (k, d_h) decoder states
    :param previous: (k,) last token ids, None before the first word
    :return: (k, V) log probabilities and (k, d_h) next states
    """
    rows = states.shape[0]
    graph = Graph()
    nodes = {name: graph.constant(value) for name, value in parameters.items()}
    decoder = model.decoder_parameters(nodes)
    attention = AttentionMemory(
        states=[
            graph.constant(np.repeat(state, rows, axis=0)) for state in memory.states
        ],
        projected=[graph.constant(np.repeat(p, rows, axis=0)) for p in memory.projected],
        mask=np.ones((len(memory.states), rows)),
    )
    if previous is None:
        y_prev = graph.constant(np.zeros((rows, decoder.target_embedding.shape[0])))
    else:
        y_prev = ops.embedding(decoder.target_embedding, previous)
    h_e_target = None
    if memory.h_e_target is not None:
        h_e_target = graph.constant(np.repeat(memory.h_e_target, rows, axis=0))
    state, distribution = decoder_step(
        graph.constant(states),
        y_prev,
        attention,
        h_e_target,
        decoder,
        model.config.gate_fix,
    )
    return distribution.log_probs.value, state.s.value


def _best_extensions(
    scores: np.ndarray, live: List[Hypothesis], width: int
) -> List[Tuple[float, int, int]]:
    flat = scores.ravel()
    vocabulary = scores.shape[1]
    if flat.size > width:
        threshold = np.partition(flat, flat.size - width)[flat.size - width]
        candidates = np.nonzero(flat >= threshold)[0]
    else:
        candidates = np.arange(flat.size)
    extensions = [
        (float(flat[j]), int(j // vocabulary), int(j % vocabulary)) for j in candidates
    ]
    extensions.sort(key=lambda e: (-e[0], live[e[1]].tokens + (e[2],)))
    return extensions[:width]


def beam_search(
    model: MultimodalVnmt,
    parameters: dict,
    source: Sequence[int],
    beam_size: int = 12,
    max_len: Optional[int] = None,
    normalize_length: bool = False,
) -> Hypothesis:
    """
    Searches the best translation of one source sentence.

    When no hypothesis finishes within ``max_len`` the best unfinished one is
    returned. Its log probability can exceed that of the finished hypothesis a
    wider beam returns, so scores of different beam widths only compare between
    finished hypotheses.

    :param source: source ids ending with the end-of-sentence id
    :param beam_size: number of hypotheses kept per step
    :param max_len: maximum number of target tokens including the end-of-sentence id
    :param normalize_length: rank finished hypotheses by log probability per token
    :return: best finished hypothesis, or the best unfinished one at ``max_len``
    """
    if beam_size < 1:
        raise ContractError("Beam size must be at least 1")
    max_len = model.config.maxlen + 1 if max_len is None else max_len
    memory = encode_for_translation(model, parameters, source)
    live = [Hypothesis(tokens=(), log_prob=0.0, state=memory.initial_state[0])]
    finished: List[Hypothesis] = []

    for step in range(max_len):
        width = beam_size - len(finished)
        if width <= 0 or not live:
            break
        previous = None if step == 0 else np.array([h.tokens[-1] for h in live])
        log_probs, states = next_word_log_probs(
            model, parameters, memory, np.stack([h.state for h in live]), previous
        )
        scores = np.array([h.log_prob for h in live])[:, None] + log_probs
        extended = []
        for score, row, token in _best_extensions(scores, live, width):
            hypothesis = Hypothesis(
                tokens=live[row].tokens + (token,),
                log_prob=score,
                finished=token == EOS_ID,
                state=states[row],
            )
            (finished if hypothesis.finished else extended).append(hypothesis)
        live = extended

    pool = finished or live
    return min(pool, key=lambda h: h.ranking_key(normalize_length))


def greedy_decode(
    model: MultimodalVnmt,
    parameters: dict,
    source: Sequence[int],
    max_len: Optional[int] = None,
) -> Hypothesis:
    """Picks the most probable word at every step, the lowest id on ties."""
    max_len = model.config.maxlen + 1 if max_len is None else max_len
    memory = encode_for_translation(model, parameters, source)
    state, tokens, log_prob = memory.initial_state, [], 0.0
    for _ in range(max_len):
        previous = None if not tokens else np.array([tokens[-1]])
        log_probs, state = next_word_log_probs(model, parameters, memory, state, previous)
        token = int(np.argmax(log_probs[0]))
        log_prob += float(log_probs[0, token])
        tokens.append(token)
        if token == EOS_ID:
            break
    return Hypothesis(
        tokens=tuple(tokens),
        log_prob=log_prob,
        finished=tokens[-1] == EOS_ID,
        state=state[0],
    )

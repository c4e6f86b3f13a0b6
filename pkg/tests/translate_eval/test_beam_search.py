from typing import List, Tuple

import numpy as np
import pytest
from more_itertools import pairwise

from mvnmt.inferrer.gaussian import latent_for_translation
from mvnmt.model_parameters import ModelVariant
from mvnmt.numeric_core.errors import ContractError
from mvnmt.numeric_core.graph import Graph
from mvnmt.text_encoder.sequence_batch import SequenceBatch
from mvnmt.text_encoder.vocabulary import EOS_ID
from mvnmt.trainer.model import MultimodalVnmt
from mvnmt.trainer.toy import toy_config
from mvnmt.translate_eval.beam_search import (
    Hypothesis,
    beam_search,
    encode_for_translation,
    greedy_decode,
    next_word_log_probs,
)

VOCABULARY = 4
MAX_LEN = 3


def toy_model(
    seed: int,
    variant: ModelVariant = ModelVariant.VNMT,
    vocabulary: int = VOCABULARY,
    max_len: int = MAX_LEN,
):
    config = toy_config(
        variant, target_vocab_size=vocabulary, maxlen=max_len - 1, init_std=1.0
    )
    model = MultimodalVnmt(config=config)
    rng = np.random.default_rng(seed)
    source = rng.integers(1, config.source_vocab_size, size=2).tolist() + [EOS_ID]
    return model, model.init_params(rng), source


def enumerate_finished(model, parameters, source) -> List[Tuple[Tuple[int, ...], float]]:
    """Every target ending with the end-of-sentence id within the length limit."""
    memory = encode_for_translation(model, parameters, source)
    finished = []

    def extend(tokens, state, log_prob):
        previous = np.array([tokens[-1]]) if tokens else None
        log_probs, states = next_word_log_probs(
            model, parameters, memory, state, previous
        )
        for token in range(VOCABULARY):
            sequence = tokens + (token,)
            score = log_prob + float(log_probs[0, token])
            if token == EOS_ID:
                finished.append((sequence, score))
            elif len(sequence) < MAX_LEN:
                extend(sequence, states, score)

    extend((), memory.initial_state, 0.0)
    return finished


class TestBeamSearch:
    @pytest.mark.unittest
    @pytest.mark.parametrize("seed", range(5))
    def test_wide_beam_finds_the_exhaustive_optimum(self, seed):
        model, parameters, source = toy_model(seed)
        candidates = enumerate_finished(model, parameters, source)

        best = beam_search(model, parameters, source, beam_size=VOCABULARY ** MAX_LEN)

        expected = min(candidates, key=lambda c: (-c[1], len(c[0]), c[0]))
        assert best.finished
        assert best.tokens == expected[0]
        assert best.log_prob == pytest.approx(expected[1], rel=1e-10)

    @pytest.mark.systemtest
    def test_wide_beam_on_many_random_models(self):
        for seed in range(100):
            model, parameters, source = toy_model(seed)
            candidates = enumerate_finished(model, parameters, source)
            best = beam_search(model, parameters, source, beam_size=VOCABULARY ** MAX_LEN)
            optimum = min(candidates, key=lambda c: (-c[1], len(c[0]), c[0]))
            assert best.tokens == optimum[0]

    @pytest.mark.systemtest
    @pytest.mark.parametrize("seed", range(100))
    def test_wider_beam_finds_no_worse_finished_translation(self, seed):
        model, parameters, source = toy_model(seed, vocabulary=6, max_len=5)

        results = [
            beam_search(model, parameters, source, beam_size=beam_size)
            for beam_size in (1, 2, 3, 4, 6, 12)
        ]

        for narrow, wide in pairwise(results):
            if narrow.finished and wide.finished:
                assert wide.log_prob >= narrow.log_prob - 1e-12

    @pytest.mark.unittest
    def test_length_normalization_ranks_per_token(self):
        model, parameters, source = toy_model(7)
        candidates = enumerate_finished(model, parameters, source)

        best = beam_search(
            model,
            parameters,
            source,
            beam_size=VOCABULARY ** MAX_LEN,
            normalize_length=True,
        )

        expected = min(candidates, key=lambda c: (-c[1] / len(c[0]), len(c[0]), c[0]))
        assert best.tokens == expected[0]

    @pytest.mark.unittest
    @pytest.mark.parametrize(
        "variant", [ModelVariant.NMT, ModelVariant.VNMT, ModelVariant.G_O_TXT]
    )
    @pytest.mark.parametrize("seed", range(4))
    def test_beam_of_one_is_greedy(self, variant, seed):
        model, parameters, source = toy_model(seed, variant)

        beam = beam_search(model, parameters, source, beam_size=1)
        greedy = greedy_decode(model, parameters, source)

        assert beam.tokens == greedy.tokens
        assert beam.log_prob == greedy.log_prob

    @pytest.mark.unittest
    def test_output_respects_the_length_limit(self):
        model, parameters, source = toy_model(3)
        hypothesis = beam_search(model, parameters, source, beam_size=2, max_len=1)
        assert len(hypothesis.tokens) == 1

    @pytest.mark.unittest
    def test_beam_size_must_be_positive(self):
        model, parameters, source = toy_model(0)
        with pytest.raises(ContractError):
            beam_search(model, parameters, source, beam_size=0)

    @pytest.mark.unittest
    def test_ranking_prefers_shorter_then_smaller_ids(self):
        hypotheses = [
            Hypothesis(tokens=(2, 0), log_prob=-1.0),
            Hypothesis(tokens=(1, 0), log_prob=-1.0),
            Hypothesis(tokens=(0,), log_prob=-1.0),
        ]
        ranked = sorted(hypotheses, key=lambda h: h.ranking_key())
        assert [h.tokens for h in ranked] == [(0,), (1, 0), (2, 0)]


class TestNextWordDistribution:
    @pytest.mark.unittest
    def test_every_step_is_a_distribution(self):
        model, parameters, source = toy_model(1)
        memory = encode_for_translation(model, parameters, source)
        states = np.repeat(memory.initial_state, 3, axis=0)

        log_probs, next_states = next_word_log_probs(
            model, parameters, memory, states, np.array([1, 2, 3])
        )

        np.testing.assert_allclose(np.exp(log_probs).sum(axis=1), 1.0, rtol=1e-12)
        assert next_states.shape == states.shape

    @pytest.mark.unittest
    @pytest.mark.parametrize("variant", [ModelVariant.VNMT, ModelVariant.G])
    def test_chain_of_steps_matches_the_training_likelihood(self, variant):
        model, parameters, source = toy_model(2, variant)
        candidates = enumerate_finished(model, parameters, source)

        graph = Graph()
        nodes = {name: graph.constant(value) for name, value in parameters.items()}
        encoder = model.encode_source(nodes, SequenceBatch.from_sequences([source]))
        h_e_target = model.project_latent(
            nodes, latent_for_translation(model.prior(nodes, encoder))
        )
        for tokens, log_prob in candidates:
            target = SequenceBatch.from_sequences([list(tokens)])
            likelihood = model.log_likelihood(nodes, encoder, target, h_e_target)
            assert float(likelihood.value[0]) == pytest.approx(log_prob, rel=1e-10)

    @pytest.mark.unittest
    def test_finished_probabilities_stay_below_one(self):
        model, parameters, source = toy_model(6)
        finished = enumerate_finished(model, parameters, source)
        total = sum(np.exp(score) for _, score in finished)
        assert 0.0 < total <= 1.0 + 1e-12

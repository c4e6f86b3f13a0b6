import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

from mvnmt.numeric_core import ops
from mvnmt.numeric_core.graph import Graph
from mvnmt.text_encoder.gru import GruParameters, encode_bidirectional, gru_step, run_gru
from tests.utils import TestUtils

HIDDEN, INPUT = 3, 2
GRU_SHAPES = TestUtils.gru_shapes("gru", HIDDEN, INPUT)


def zero_parameters(graph: Graph) -> GruParameters:
    nodes = {name: graph.constant(np.zeros(shape)) for name, shape in GRU_SHAPES.items()}
    return GruParameters.from_nodes(nodes, "gru")


def random_parameters(graph: Graph, seed: int) -> GruParameters:
    nodes = graph.parameters_from(TestUtils.random_parameters(GRU_SHAPES, seed=seed))
    return GruParameters.from_nodes(nodes, "gru")


def constant_parameters(graph: Graph, seed: int) -> GruParameters:
    values = TestUtils.random_parameters(GRU_SHAPES, seed=seed)
    nodes = {name: graph.constant(value) for name, value in values.items()}
    return GruParameters.from_nodes(nodes, "gru")


class TestGruStep:
    @pytest.mark.unittest
    def test_zero_parameters_halve_the_previous_state(self):
        graph = Graph()
        state = np.array([[0.4, -1.0, 2.0]])
        result = gru_step(
            graph.constant(state),
            graph.constant(np.ones((1, INPUT))),
            zero_parameters(graph),
        )
        np.testing.assert_allclose(result.value, 0.5 * state)

    @pytest.mark.unittest
    def test_zero_state_is_a_fixed_point_of_zero_parameters(self):
        graph = Graph()
        result = gru_step(
            graph.constant(np.zeros((2, HIDDEN))),
            graph.constant(np.zeros((2, INPUT))),
            zero_parameters(graph),
        )
        np.testing.assert_array_equal(result.value, np.zeros((2, HIDDEN)))

    @pytest.mark.unittest
    def test_gradient_through_five_steps(self):
        inputs = np.random.default_rng(3).normal(size=(5, 2, INPUT))

        def loss(graph, nodes):
            parameters = GruParameters.from_nodes(nodes, "gru")
            state = graph.constant(np.zeros((2, HIDDEN)))
            for step in inputs:
                state = gru_step(state, graph.constant(step), parameters)
            return ops.reduce_sum(ops.mul(state, state))

        TestUtils.assert_gradients_match(loss, TestUtils.random_parameters(GRU_SHAPES))


class TestRunGru:
    @pytest.mark.unittest
    def test_masked_steps_keep_the_previous_state(self):
        graph = Graph()
        inputs = [graph.constant(np.ones((2, INPUT))) for _ in range(3)]
        mask = np.array([[1.0, 1.0], [1.0, 0.0], [1.0, 0.0]])

        states = run_gru(inputs, mask, random_parameters(graph, seed=4))

        np.testing.assert_array_equal(states[1].value[1], states[0].value[1])
        np.testing.assert_array_equal(states[2].value[1], states[0].value[1])
        assert not np.allclose(states[1].value[0], states[0].value[0])

    @pytest.mark.unittest
    def test_single_step_bidirectional_is_one_step_from_zero_in_each_direction(self):
        graph = Graph()
        forward = random_parameters(graph, seed=5)
        backward = constant_parameters(graph, seed=6)
        x = graph.constant(np.array([[0.3, -0.7]]))
        zero = graph.constant(np.zeros((1, HIDDEN)))

        (state,) = encode_bidirectional([x], np.ones((1, 1)), forward, backward)

        np.testing.assert_allclose(
            state.value[:, :HIDDEN], gru_step(zero, x, forward).value
        )
        np.testing.assert_allclose(
            state.value[:, HIDDEN:], gru_step(zero, x, backward).value
        )

    @pytest.mark.unittest
    def test_palindrome_has_equal_halves_at_its_center(self):
        graph = Graph()
        parameters = random_parameters(graph, seed=7)
        rows = np.random.default_rng(8).normal(size=(3, 1, INPUT))
        sequence = [rows[0], rows[1], rows[2], rows[1], rows[0]]

        states = encode_bidirectional(
            [graph.constant(row) for row in sequence],
            np.ones((5, 1)),
            parameters,
            parameters,
        )

        center = states[2].value[0]
        np.testing.assert_allclose(center[:HIDDEN], center[HIDDEN:])

    @pytest.mark.unittest
    @settings(max_examples=50, deadline=None)
    @given(length=integers(1, 6), seed=integers(0, 2 ** 16))
    def test_reversed_input_with_swapped_directions_mirrors_the_states(
        self, length, seed
    ):
        graph = Graph()
        forward = constant_parameters(graph, seed)
        backward = constant_parameters(graph, seed + 1)
        rows = np.random.default_rng(seed).normal(size=(length, 2, INPUT))
        mask = np.ones((length, 2))

        original = encode_bidirectional(
            [graph.constant(row) for row in rows], mask, forward, backward
        )
        mirrored = encode_bidirectional(
            [graph.constant(row) for row in rows[::-1]], mask, backward, forward
        )

        for i, state in enumerate(mirrored):
            counterpart = original[length - 1 - i].value
            np.testing.assert_allclose(
                state.value[:, :HIDDEN], counterpart[:, HIDDEN:], rtol=1e-12
            )
            np.testing.assert_allclose(
                state.value[:, HIDDEN:], counterpart[:, :HIDDEN], rtol=1e-12
            )

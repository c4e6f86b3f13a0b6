import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers, permutations

from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import ContractError
from mvnmt.numeric_core.graph import Graph
from mvnmt.text_encoder.gru import GruParameters
from mvnmt.text_encoder.sequence_batch import SequenceBatch
from mvnmt.text_encoder.text_encoder import embed, encode_text, mean_pool
from tests.utils import TestUtils


class TestEmbed:
    @pytest.mark.unittest
    def test_end_of_sentence_row_is_table_column_zero(self):
        graph = Graph()
        table = np.arange(8.0).reshape(2, 4)
        (row,) = embed(graph.constant(table), SequenceBatch.from_sequences([[0]]))
        np.testing.assert_array_equal(row.value, [table[:, 0]])

    @pytest.mark.unittest
    def test_one_hot_table_gives_one_hot_rows(self):
        graph = Graph()
        rows = embed(graph.constant(np.eye(4)), SequenceBatch.from_sequences([[2, 3, 0]]))
        np.testing.assert_array_equal(
            np.concatenate([row.value for row in rows]), np.eye(4)[[2, 3, 0]]
        )

    @pytest.mark.unittest
    def test_permuted_sequence_permutes_rows(self):
        graph = Graph()
        table = graph.constant(np.random.default_rng(0).normal(size=(3, 5)))
        original = embed(table, SequenceBatch.from_sequences([[1, 4, 2]]))
        permuted = embed(table, SequenceBatch.from_sequences([[2, 1, 4]]))
        for source, target in zip([2, 0, 1], range(3)):
            np.testing.assert_array_equal(permuted[target].value, original[source].value)


class TestMeanPool:
    @staticmethod
    def pool(rows, mask=None):
        graph = Graph()
        states = [graph.constant(np.array([row])) for row in rows]
        mask = np.ones((len(rows), 1)) if mask is None else mask
        return mean_pool(states, mask).value[0]

    @pytest.mark.unittest
    @pytest.mark.parametrize(
        "rows, expected",
        [
            pytest.param([[1.5, -2.0]] * 3, [1.5, -2.0], id="identical_rows"),
            pytest.param([[1.0, 2.0], [-1.0, -2.0]], [0.0, 0.0], id="opposite_rows"),
            pytest.param(
                [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [3.0, 4.0], id="arithmetic"
            ),
        ],
    )
    def test_mean_over_rows(self, rows, expected):
        np.testing.assert_allclose(self.pool(rows), expected)

    @pytest.mark.unittest
    def test_padding_is_excluded(self):
        pooled = self.pool([[2.0], [4.0], [100.0]], mask=np.array([[1.0], [1.0], [0.0]]))
        np.testing.assert_allclose(pooled, [3.0])

    @pytest.mark.unittest
    @settings(max_examples=50, deadline=None)
    @given(order=permutations(range(5)), seed=integers(0, 2 ** 16))
    def test_row_order_does_not_matter(self, order, seed):
        rows = np.random.default_rng(seed).normal(size=(5, 3))
        np.testing.assert_allclose(
            self.pool(rows[list(order)]), self.pool(rows), rtol=1e-12, atol=1e-12
        )

    @pytest.mark.unittest
    def test_row_without_real_positions_is_rejected(self):
        with pytest.raises(ContractError):
            self.pool([[1.0]], mask=np.zeros((1, 1)))


class TestEncodeText:
    @pytest.mark.unittest
    def test_states_have_both_directions(self):
        graph = Graph()
        values = dict(
            TestUtils.gru_shapes("f", 3, 4),
            **TestUtils.gru_shapes("b", 3, 4),
            table=(4, 6),
        )
        nodes = graph.parameters_from(TestUtils.random_parameters(values))
        batch = SequenceBatch.from_sequences([[3, 2, 0], [5, 0]])

        output = encode_text(
            nodes["table"],
            batch,
            GruParameters.from_nodes(nodes, "f"),
            GruParameters.from_nodes(nodes, "b"),
        )

        assert len(output.states) == 3
        assert output.states[0].shape == (2, 6)
        assert output.pooled.shape == (2, 6)
        assert output.states_of(1).shape == (2, 6)

    @pytest.mark.unittest
    def test_gradient_through_embedding_encoder_and_pooling(self):
        values = dict(
            TestUtils.gru_shapes("f", 2, 3),
            **TestUtils.gru_shapes("b", 2, 3),
            table=(3, 5),
        )
        batch = SequenceBatch.from_sequences([[1, 4, 0], [2, 0]])

        def loss(graph, nodes):
            output = encode_text(
                nodes["table"],
                batch,
                GruParameters.from_nodes(nodes, "f"),
                GruParameters.from_nodes(nodes, "b"),
            )
            return ops.reduce_sum(ops.tanh(output.pooled))

        TestUtils.assert_gradients_match(
            loss, TestUtils.random_parameters(values, seed=2)
        )

    @pytest.mark.unittest
    @pytest.mark.parametrize("seed", range(5))
    def test_word_order_changes_the_pooled_states(self, seed):
        graph = Graph()
        values = dict(
            TestUtils.gru_shapes("f", 3, 4),
            **TestUtils.gru_shapes("b", 3, 4),
            table=(4, 6),
        )
        nodes = {
            name: graph.constant(value)
            for name, value in TestUtils.random_parameters(values, seed=seed).items()
        }
        forward = GruParameters.from_nodes(nodes, "f")
        backward = GruParameters.from_nodes(nodes, "b")

        def pooled(sentence):
            batch = SequenceBatch.from_sequences([sentence])
            return encode_text(nodes["table"], batch, forward, backward).pooled.value

        def pooled_embeddings(sentence):
            batch = SequenceBatch.from_sequences([sentence])
            return mean_pool(embed(nodes["table"], batch), batch.mask).value

        np.testing.assert_allclose(
            pooled_embeddings([1, 4, 2, 0]), pooled_embeddings([2, 1, 4, 0]), atol=1e-12
        )
        assert not np.allclose(pooled([1, 4, 2, 0]), pooled([2, 1, 4, 0]))

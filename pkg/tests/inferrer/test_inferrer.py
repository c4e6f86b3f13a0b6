import numpy as np
import pytest

from mvnmt.inferrer.gaussian import LatentSample, kl_divergence
from mvnmt.inferrer.inferrer import (
    GaussianNetworkParameters,
    LatentProjectionParameters,
    posterior_params,
    prior_params,
    project_to_target,
)
from mvnmt.numeric_core import ops
from mvnmt.numeric_core.graph import Graph
from tests.utils import TestUtils

LATENT = 3


def network_shapes(prefix: str, blocks: dict, hidden: int = LATENT) -> dict:
    shapes = {
        "{}.W_z.{}".format(prefix, name): (hidden, size) for name, size in blocks.items()
    }
    shapes.update(
        {
            prefix + ".b_z": (hidden,),
            prefix + ".W_mu": (LATENT, hidden),
            prefix + ".b_mu": (LATENT,),
            prefix + ".W_sigma": (LATENT, hidden),
            prefix + ".b_sigma": (LATENT,),
        }
    )
    return shapes


def constant_nodes(graph: Graph, values: dict) -> dict:
    return {name: graph.constant(value) for name, value in values.items()}


class TestGaussianNetworks:
    @pytest.mark.unittest
    @pytest.mark.parametrize("network", [posterior_params, prior_params])
    def test_zero_parameters_give_a_standard_normal(self, network):
        graph = Graph()
        shapes = network_shapes("net", {"source": 4, "target": 4})
        nodes = constant_nodes(graph, {name: np.zeros(s) for name, s in shapes.items()})
        parameters = GaussianNetworkParameters.from_nodes(
            nodes, "net", ("source", "target")
        )

        result = network(graph.constant(np.ones((2, 8))), parameters)

        np.testing.assert_array_equal(result.mu.value, np.zeros((2, LATENT)))
        np.testing.assert_array_equal(result.log_var.value, np.zeros((2, LATENT)))
        np.testing.assert_array_equal(result.sigma, np.ones((2, LATENT)))

    @pytest.mark.unittest
    def test_component_blocks_are_concatenated_in_order(self):
        graph = Graph()
        shapes = network_shapes("net", {"source": 2, "image": 1})
        values = TestUtils.random_parameters(shapes, seed=1)
        parameters = GaussianNetworkParameters.from_nodes(
            constant_nodes(graph, values), "net", ("source", "image")
        )
        np.testing.assert_array_equal(
            parameters.W_z.value,
            np.concatenate([values["net.W_z.source"], values["net.W_z.image"]], axis=1),
        )

    @pytest.mark.unittest
    def test_log_variance_is_clamped(self):
        graph = Graph()
        shapes = network_shapes("net", {"source": 1})
        values = {name: np.zeros(s) for name, s in shapes.items()}
        values["net.b_sigma"] = np.array([50.0, -50.0, 1.0])
        parameters = GaussianNetworkParameters.from_nodes(
            constant_nodes(graph, values), "net", ("source",)
        )

        result = prior_params(
            graph.constant(np.ones((1, 1))), parameters, log_variance_bound=8.0
        )

        np.testing.assert_array_equal(result.log_var.value, [[8.0, -8.0, 1.0]])

    @pytest.mark.unittest
    def test_kl_gradient_with_respect_to_posterior_mean_weights(self):
        posterior_shapes = network_shapes("posterior", {"source": 2, "target": 2})
        prior_shapes = network_shapes("prior", {"source": 2})
        h_f = np.array([[0.3, -0.4], [1.0, 0.2]])
        h_g = np.array([[-0.5, 0.9], [0.1, 0.1]])
        fixed_prior = TestUtils.random_parameters(prior_shapes, seed=4)

        def loss(graph, nodes):
            nodes = dict(nodes, **constant_nodes(graph, fixed_prior))
            q = posterior_params(
                graph.constant(np.concatenate([h_f, h_g], axis=1)),
                GaussianNetworkParameters.from_nodes(
                    nodes, "posterior", ("source", "target")
                ),
            )
            p = prior_params(
                graph.constant(h_f),
                GaussianNetworkParameters.from_nodes(nodes, "prior", ("source",)),
            )
            return ops.reduce_sum(kl_divergence(q, p))

        TestUtils.assert_gradients_match(
            loss, TestUtils.random_parameters(posterior_shapes, seed=5)
        )


class TestProjectToTarget:
    @staticmethod
    def project(weights: dict, h_z) -> np.ndarray:
        graph = Graph()
        parameters = LatentProjectionParameters.from_nodes(
            constant_nodes(graph, weights), ("source",)
        )
        sample = LatentSample(h_z=graph.constant(h_z), epsilon=np.zeros_like(h_z))
        return project_to_target(sample, parameters).value

    @pytest.mark.unittest
    def test_zero_parameters_give_zero(self):
        weights = {
            "latent.W_z2.source": np.zeros((4, 2)),
            "latent.b_z2.source": np.zeros(4),
        }
        np.testing.assert_array_equal(
            self.project(weights, np.ones((1, 2))), np.zeros((1, 4))
        )

    @pytest.mark.unittest
    def test_zero_weight_gives_tanh_of_bias(self):
        bias = np.array([0.5, -2.0, 0.0, 3.0])
        weights = {"latent.W_z2.source": np.zeros((4, 2)), "latent.b_z2.source": bias}
        np.testing.assert_allclose(
            self.project(weights, np.array([[5.0, -5.0]])), [np.tanh(bias)]
        )

    @pytest.mark.unittest
    def test_blocks_stack_along_the_output_axis(self):
        graph = Graph()
        values = {
            "latent.W_z2.source": np.ones((2, 3)),
            "latent.b_z2.source": np.zeros(2),
            "latent.W_z2.target": np.ones((1, 3)),
            "latent.b_z2.target": np.zeros(1),
        }
        parameters = LatentProjectionParameters.from_nodes(
            constant_nodes(graph, values), ("source", "target")
        )
        assert parameters.W_z2.shape == (3, 3)
        assert parameters.b_z2.shape == (3,)

"""
Evidence lower bound and log marginal likelihood of a single sentence pair by
Gauss-Hermite quadrature over a one-dimensional latent.

For :math:`z \\sim N(\\mu, \\sigma^2)`,

.. math::

    E[f(z)] \\approx \\sum_k \\frac{w_k}{\\sqrt{\\pi}} f(\\mu + \\sqrt{2}\\sigma x_k)
"""
from typing import Dict, Tuple

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import logsumexp

from mvnmt.inferrer.gaussian import GaussianDiag, LatentSample, kl_divergence
from mvnmt.numeric_core.errors import ContractError
from mvnmt.numeric_core.graph import Graph
from mvnmt.trainer.model import MultimodalVnmt, TrainingBatch

QUADRATURE_NODES = 64


def _check(model: MultimodalVnmt, batch: TrainingBatch):
    if not model.variant.has_inferrer or model.config.dimv != 1:
        raise ContractError("Quadrature needs a model with a one-dimensional latent")
    if batch.size != 1:
        raise ContractError("Quadrature works on a single sentence pair")


def _gaussians(
    model: MultimodalVnmt, parameters: Dict[str, np.ndarray], batch: TrainingBatch
) -> Tuple[GaussianDiag, GaussianDiag, float]:
    graph = Graph()
    nodes = {name: graph.constant(value) for name, value in parameters.items()}
    encoder = model.encode_source(nodes, batch.source)
    prior = model.prior(nodes, encoder)
    posterior = model.posterior(nodes, batch, encoder)
    return posterior, prior, float(kl_divergence(posterior, prior).value[0])


def log_likelihood_at(
    model: MultimodalVnmt,
    parameters: Dict[str, np.ndarray],
    batch: TrainingBatch,
    latent_values: np.ndarray,
) -> np.ndarray:
    """
    Teacher-forced log-likelihood of one sentence pair for several latent values.

    :param latent_values: (N, d_z) latent samples
    :return: (N,) log-likelihoods
    """
    latent_values = np.asarray(latent_values, dtype=np.float64)
    repeated = batch.repeat(latent_values.shape[0])
    graph = Graph()
    nodes = {name: graph.constant(value) for name, value in parameters.items()}
    encoder = model.encode_source(nodes, repeated.source)
    sample = LatentSample(
        h_z=graph.constant(latent_values), epsilon=np.zeros_like(latent_values)
    )
    h_e_target = model.project_latent(nodes, sample)
    return model.log_likelihood(nodes, encoder, repeated.target, h_e_target).value


def _nodes(gaussian: GaussianDiag, count: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = hermgauss(count)
    mu = float(gaussian.mu.value[0, 0])
    sigma = float(gaussian.sigma[0, 0])
    return (mu + np.sqrt(2.0) * sigma * x).reshape(-1, 1), w / np.sqrt(np.pi)


def elbo_by_quadrature(
    model: MultimodalVnmt,
    parameters: Dict[str, np.ndarray],
    batch: TrainingBatch,
    nodes: int = QUADRATURE_NODES,
) -> float:
    """
    .. math::

        ELBO = E_{q(z|x,y)}[\\log p(y|z,x)] - KL(q(z|x,y) \\| p(z|x))
    """
    _check(model, batch)
    posterior, _, kl = _gaussians(model, parameters, batch)
    latent, weights = _nodes(posterior, nodes)
    log_likelihood = log_likelihood_at(model, parameters, batch, latent)
    return float(np.dot(weights, log_likelihood) - kl)


def log_marginal_by_quadrature(
    model: MultimodalVnmt,
    parameters: Dict[str, np.ndarray],
    batch: TrainingBatch,
    nodes: int = QUADRATURE_NODES,
) -> float:
    """
    .. math::

        \\log p(y|x) = \\log E_{p(z|x)}[p(y|z,x)]
    """
    _check(model, batch)
    _, prior, _ = _gaussians(model, parameters, batch)
    latent, weights = _nodes(prior, nodes)
    log_likelihood = log_likelihood_at(model, parameters, batch, latent)
    return float(logsumexp(np.log(weights) + log_likelihood))


def elbo_gap(
    model: MultimodalVnmt,
    parameters: Dict[str, np.ndarray],
    batch: TrainingBatch,
    nodes: int = QUADRATURE_NODES,
) -> float:
    """Log marginal likelihood minus the bound; nonnegative up to quadrature error."""
    marginal = log_marginal_by_quadrature(model, parameters, batch, nodes)
    return marginal - elbo_by_quadrature(model, parameters, batch, nodes)

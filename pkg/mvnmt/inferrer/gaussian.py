"""
Diagonal Gaussians over the latent space.
"""
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from scipy.stats import norm

from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import DimensionError
from mvnmt.numeric_core.graph import Node

DEFAULT_LOG_VARIANCE_BOUND = 8.0


class GaussianDiag(BaseModel):
    """
    Gaussian with diagonal covariance, one row per sentence.

    :param mu: mean, (B, d_z)
    :param log_var: log variance, (B, d_z), clamped to a finite range
    """

    mu: Node
    log_var: Node

    class Config:
        arbitrary_types_allowed = True

    @property
    def dimension(self) -> int:
        return self.mu.shape[-1]

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(0.5 * self.log_var.value)


class LatentSample(BaseModel):
    h_z: Node
    epsilon: np.ndarray

    class Config:
        arbitrary_types_allowed = True


def kl_divergence(q: GaussianDiag, p: GaussianDiag) -> Node:
    """
    KL divergence between two diagonal Gaussians, summed over the latent
    dimensions of every row.

    .. math::

        KL(q \\| p) = \\sum_k \\frac{1}{2}(\\log\\sigma'^2_k - \\log\\sigma^2_k)
            + \\frac{\\sigma^2_k + (\\mu_k - \\mu'_k)^2}{2\\sigma'^2_k} - \\frac{1}{2}

    :param q: approximate posterior
    :param p: prior
    :return: KL per row
    """
    if q.mu.shape != p.mu.shape:
        raise DimensionError("kl_divergence", q.mu.shape, p.mu.shape)
    difference = ops.sub(q.mu, p.mu)
    spread = ops.add(ops.exp(q.log_var), ops.mul(difference, difference))
    ratio = ops.mul(spread, ops.exp(ops.scale(p.log_var, -1.0)))
    terms = ops.add(
        ops.scale(ops.sub(p.log_var, q.log_var), 0.5),
        ops.add_scalar(ops.scale(ratio, 0.5), -0.5),
    )
    return ops.reduce_sum(terms, axis=-1)


def reparameterize(gaussian: GaussianDiag, epsilon: np.ndarray) -> LatentSample:
    """
    Draws ``mu + sigma * epsilon``; ``epsilon`` is a constant so gradients only
    reach the mean and the log variance.
    """
    epsilon = np.asarray(epsilon, dtype=np.float64)
    if epsilon.shape != gaussian.mu.shape:
        raise DimensionError("reparameterize", gaussian.mu.shape, epsilon.shape)
    graph = gaussian.mu.graph
    noise = ops.mul(ops.exp(ops.scale(gaussian.log_var, 0.5)), graph.constant(epsilon))
    return LatentSample(h_z=ops.add(gaussian.mu, noise), epsilon=epsilon)


def latent_for_translation(prior: GaussianDiag) -> LatentSample:
    """The prior mean, used as the latent during translation."""
    return LatentSample(h_z=prior.mu, epsilon=np.zeros(prior.mu.shape))


def monte_carlo_kl(
    q_mu: np.ndarray,
    q_log_var: np.ndarray,
    p_mu: np.ndarray,
    p_log_var: np.ndarray,
    samples: int,
    rng: np.random.Generator,
) -> Tuple[float, float]:
    """
    Estimates KL(q || p) as the sample mean of log q(z) - log p(z) with z ~ q.

    :return: estimate and its standard error
    """
    q_sigma = np.exp(0.5 * np.asarray(q_log_var, dtype=np.float64))
    p_sigma = np.exp(0.5 * np.asarray(p_log_var, dtype=np.float64))
    draws = q_mu + q_sigma * rng.standard_normal((samples, np.size(q_mu)))
    log_ratio = (
        norm.logpdf(draws, loc=q_mu, scale=q_sigma).sum(axis=1)
        - norm.logpdf(draws, loc=p_mu, scale=p_sigma).sum(axis=1)
    )
    return float(log_ratio.mean()), float(log_ratio.std(ddof=1) / np.sqrt(samples))

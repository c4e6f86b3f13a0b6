"""
Neural posterior and prior networks and the projection of the latent sample
back to the space the decoder consumes.
"""
from typing import Dict, Sequence

from pydantic import BaseModel

from mvnmt.inferrer.gaussian import DEFAULT_LOG_VARIANCE_BOUND, GaussianDiag, LatentSample
from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import DimensionError
from mvnmt.numeric_core.graph import Node


def _assemble(
    nodes: Dict[str, Node], name: str, components: Sequence[str], axis: int
) -> Node:
    blocks = [nodes["{}.{}".format(name, component)] for component in components]
    return blocks[0] if len(blocks) == 1 else ops.concat(blocks, axis=axis)


class GaussianNetworkParameters(BaseModel):
    """
    :param W_z: (d_z, d_in) input map, assembled from per-component blocks
    """

    W_z: Node
    b_z: Node
    W_mu: Node
    b_mu: Node
    W_sigma: Node
    b_sigma: Node

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def from_nodes(
        cls, nodes: Dict[str, Node], prefix: str, components: Sequence[str]
    ) -> "GaussianNetworkParameters":
        return cls(
            W_z=_assemble(nodes, prefix + ".W_z", components, axis=1),
            b_z=nodes[prefix + ".b_z"],
            W_mu=nodes[prefix + ".W_mu"],
            b_mu=nodes[prefix + ".b_mu"],
            W_sigma=nodes[prefix + ".W_sigma"],
            b_sigma=nodes[prefix + ".b_sigma"],
        )


class LatentProjectionParameters(BaseModel):
    W_z2: Node
    b_z2: Node

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def from_nodes(
        cls, nodes: Dict[str, Node], components: Sequence[str]
    ) -> "LatentProjectionParameters":
        return cls(
            W_z2=_assemble(nodes, "latent.W_z2", components, axis=0),
            b_z2=_assemble(nodes, "latent.b_z2", components, axis=0),
        )


def _gaussian_network(
    inputs: Node,
    parameters: GaussianNetworkParameters,
    log_variance_bound: float,
    operation: str,
) -> GaussianDiag:
    if inputs.shape[-1] != parameters.W_z.shape[1]:
        raise DimensionError(operation, inputs.shape, parameters.W_z.shape)
    h_z = ops.tanh(ops.add(ops.linear(inputs, parameters.W_z), parameters.b_z))
    mu = ops.add(ops.linear(h_z, parameters.W_mu), parameters.b_mu)
    log_var = ops.add(ops.linear(h_z, parameters.W_sigma), parameters.b_sigma)
    return GaussianDiag(
        mu=mu, log_var=ops.clip(log_var, -log_variance_bound, log_variance_bound)
    )


def posterior_params(
    h_e: Node,
    parameters: GaussianNetworkParameters,
    log_variance_bound: float = DEFAULT_LOG_VARIANCE_BOUND,
) -> GaussianDiag:
    """
    Approximate posterior from the semantic representation.

    .. math::

        h_z &= \\tanh(W_z h_e + b_z) \\\\
        \\mu &= W_\\mu h_z + b_\\mu \\\\
        \\log\\sigma^2 &= W_\\sigma h_z + b_\\sigma
    """
    return _gaussian_network(h_e, parameters, log_variance_bound, "posterior_params")


def prior_params(
    h_f: Node,
    parameters: GaussianNetworkParameters,
    log_variance_bound: float = DEFAULT_LOG_VARIANCE_BOUND,
) -> GaussianDiag:
    """Prior from the pooled source sentence alone, same form as the posterior."""
    return _gaussian_network(h_f, parameters, log_variance_bound, "prior_params")


def project_to_target(
    sample: LatentSample, parameters: LatentProjectionParameters
) -> Node:
    """
    .. math::

        h'_e = \\tanh(W^{(2)}_z h_z + b^{(2)}_z)
    """
    if sample.h_z.shape[-1] != parameters.W_z2.shape[1]:
        raise DimensionError("project_to_target", sample.h_z.shape, parameters.W_z2.shape)
    return ops.tanh(ops.add(ops.linear(sample.h_z, parameters.W_z2), parameters.b_z2))

"""
Image contribution to the semantic representation.

Four fusion variants are supported:

- global (G): the whole-image row projected by an affine map,
- global and objects averaged (G+O-AVG): mean of all projected rows,
- global and objects encoded (G+O-RNN): the projected rows run through a
  bidirectional GRU and mean pooled,
- global and objects as text (G+O-TXT): projected rows prepended to the
  embedded source and target sentences before they are encoded.
"""
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from mvnmt.image_encoder.image_features import ImageFeatureBatch
from mvnmt.model_parameters import IMAGE, SOURCE, TARGET, ModelVariant
from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import ConfigurationError, DimensionError
from mvnmt.numeric_core.graph import Node
from mvnmt.text_encoder.gru import GruParameters, encode_bidirectional
from mvnmt.text_encoder.text_encoder import mean_pool


class ImageParameters(BaseModel):
    W_pi: Node
    b_pi: Node
    forward: Optional[GruParameters] = None
    backward: Optional[GruParameters] = None

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def from_nodes(cls, nodes: Dict[str, Node]) -> "ImageParameters":
        recurrent = {}
        if "image_encoder.forward.W" in nodes:
            recurrent = dict(
                forward=GruParameters.from_nodes(nodes, "image_encoder.forward"),
                backward=GruParameters.from_nodes(nodes, "image_encoder.backward"),
            )
        return cls(W_pi=nodes["image.W_pi"], b_pi=nodes["image.b_pi"], **recurrent)


class SemanticRepresentation(BaseModel):
    """
    Concatenation of sentence and image summaries, one row per sentence.

    :param h_e: (B, d_e) node
    :param components: names of the concatenated parts in order
    """

    h_e: Node
    components: Tuple[str, ...]

    class Config:
        arbitrary_types_allowed = True

    @property
    def dimension(self) -> int:
        return self.h_e.shape[-1]


def project_affine(pi: Node, parameters: ImageParameters) -> Node:
    """
    .. math::

        h_\\pi = W_\\pi \\pi + b_\\pi
    """
    if pi.shape[-1] != parameters.W_pi.shape[1]:
        raise DimensionError("project_affine", pi.shape, parameters.W_pi.shape)
    return ops.add(ops.linear(pi, parameters.W_pi), parameters.b_pi)


def project_rows(
    features: ImageFeatureBatch, parameters: ImageParameters, graph
) -> List[Node]:
    return [
        project_affine(graph.constant(features.rows[i]), parameters)
        for i in range(features.rows.shape[0])
    ]


def encode_global(
    features: ImageFeatureBatch, parameters: ImageParameters, graph
) -> Node:
    """Projects only the whole-image row."""
    return project_affine(graph.constant(features.rows[0]), parameters)


def encode_avg(features: ImageFeatureBatch, parameters: ImageParameters, graph) -> Node:
    return mean_pool(project_rows(features, parameters, graph), features.mask)


def encode_rnn(features: ImageFeatureBatch, parameters: ImageParameters, graph) -> Node:
    """
    Treats the projected rows as a sequence of embeddings, encodes them with a
    bidirectional GRU and averages the states. Object rows keep file order.
    """
    if parameters.forward is None or parameters.backward is None:
        raise ConfigurationError("Recurrent image encoding needs image GRU parameters")
    states = encode_bidirectional(
        project_rows(features, parameters, graph),
        features.mask,
        parameters.forward,
        parameters.backward,
    )
    return mean_pool(states, features.mask)


def prefix_with_image(
    embedded: List[Node],
    mask: np.ndarray,
    features: ImageFeatureBatch,
    parameters: ImageParameters,
) -> Tuple[List[Node], np.ndarray]:
    """
    Puts the projected image rows in front of an embedded sentence. Padding
    between image rows and tokens is masked, and masked steps leave the
    recurrent state unchanged, so every row encodes as its compact prefix.
    """
    if parameters.W_pi.shape[0] != embedded[0].shape[-1]:
        raise ConfigurationError(
            "Image rows can only prefix a sentence when the image projection size "
            "{} equals the word embedding size {}".format(
                parameters.W_pi.shape[0], embedded[0].shape[-1]
            )
        )
    projected = project_rows(features, parameters, embedded[0].graph)
    return projected + embedded, np.concatenate([features.mask, mask], axis=0)


def fuse_txt(
    source_embedded: List[Node],
    source_mask: np.ndarray,
    target_embedded: List[Node],
    target_mask: np.ndarray,
    features: ImageFeatureBatch,
    parameters: ImageParameters,
    source_encoder: Tuple[GruParameters, GruParameters],
    target_encoder: Tuple[GruParameters, GruParameters],
) -> Tuple[Node, Node]:
    """
    Encodes source and target with the image rows at their head.

    The results only feed the posterior; the prior and the attention use the
    encoding of the source without image rows.

    :return: pooled source and target summaries (h_f, h_g)
    """
    pooled = []
    for embedded, mask, (forward, backward) in (
        (source_embedded, source_mask, source_encoder),
        (target_embedded, target_mask, target_encoder),
    ):
        sequence, sequence_mask = prefix_with_image(embedded, mask, features, parameters)
        states = encode_bidirectional(sequence, sequence_mask, forward, backward)
        pooled.append(mean_pool(states, sequence_mask))
    return pooled[0], pooled[1]


def encode_image(
    variant: ModelVariant, features: ImageFeatureBatch, parameters: ImageParameters, graph
) -> Node:
    if variant is ModelVariant.G:
        return encode_global(features, parameters, graph)
    if variant is ModelVariant.G_O_AVG:
        return encode_avg(features, parameters, graph)
    if variant is ModelVariant.G_O_RNN:
        return encode_rnn(features, parameters, graph)
    raise ConfigurationError(
        "Variant {} has no separate image summary".format(variant.value)
    )


def build_semantic(
    h_f: Node, h_g: Node, h_pi: Optional[Node], variant: ModelVariant
) -> SemanticRepresentation:
    """
    Concatenates source, target and image summaries in that order.
    """
    components = variant.semantic_components
    if not components:
        raise ConfigurationError(
            "Variant {} has no semantic representation".format(variant.value)
        )
    if (IMAGE in components) != (h_pi is not None):
        raise ConfigurationError(
            "Variant {} expects components {}".format(
                variant.value, ", ".join(components)
            )
        )
    parts = {SOURCE: h_f, TARGET: h_g, IMAGE: h_pi}
    return SemanticRepresentation(
        h_e=ops.concat([parts[component] for component in components], axis=-1),
        components=components,
    )

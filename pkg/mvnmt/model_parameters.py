"""
Names and shapes of every trainable parameter, per model variant.

Weights are stored as (output, input). Matrices that act on the semantic
representation are split into one block per component (source, target, image)
so that a checkpoint of a smaller variant supplies the blocks it shares with a
larger one.
"""
from collections import OrderedDict
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel

from mvnmt.numeric_core.errors import ParameterMismatchError

SOURCE = "source"
TARGET = "target"
IMAGE = "image"


class ModelVariant(str, Enum):
    NMT = "nmt"
    VNMT = "vnmt"
    G = "g"
    G_O_AVG = "g-o-avg"
    G_O_RNN = "g-o-rnn"
    G_O_TXT = "g-o-txt"

    @property
    def has_inferrer(self) -> bool:
        return self is not ModelVariant.NMT

    @property
    def uses_images(self) -> bool:
        return self in (
            ModelVariant.G,
            ModelVariant.G_O_AVG,
            ModelVariant.G_O_RNN,
            ModelVariant.G_O_TXT,
        )

    @property
    def semantic_components(self) -> Tuple[str, ...]:
        if not self.has_inferrer:
            return ()
        if self in (ModelVariant.G, ModelVariant.G_O_AVG, ModelVariant.G_O_RNN):
            return SOURCE, TARGET, IMAGE
        return SOURCE, TARGET


class ModelDimensions(BaseModel):
    hidden: int
    word: int
    latent: int
    image: int
    image_features: int
    source_vocabulary: int
    target_vocabulary: int

    def component_size(self, component: str) -> int:
        return self.image if component == IMAGE else self.hidden


class ParameterShape(BaseModel):
    name: str
    shape: Tuple[int, ...]
    is_bias: bool = False


def gru_parameter_shapes(
    prefix: str, input_size: int, hidden: int
) -> List[ParameterShape]:
    shapes = []
    for gate in ("W", "W_r", "W_o"):
        shapes.append(ParameterShape(name=f"{prefix}.{gate}", shape=(hidden, input_size)))
    for gate in ("U", "U_r", "U_o"):
        shapes.append(ParameterShape(name=f"{prefix}.{gate}", shape=(hidden, hidden)))
    for gate in ("b", "b_r", "b_o"):
        shapes.append(
            ParameterShape(name=f"{prefix}.{gate}", shape=(hidden,), is_bias=True)
        )
    return shapes


def bidirectional_parameter_shapes(
    prefix: str, input_size: int, hidden: int
) -> List[ParameterShape]:
    half = hidden // 2
    forward = gru_parameter_shapes(f"{prefix}.forward", input_size, half)
    return forward + gru_parameter_shapes(f"{prefix}.backward", input_size, half)


def gaussian_parameter_shapes(
    prefix: str, blocks: Dict[str, int], latent: int
) -> List[ParameterShape]:
    shapes = [
        ParameterShape(name=f"{prefix}.W_z.{component}", shape=(latent, size))
        for component, size in blocks.items()
    ]
    shapes.append(ParameterShape(name=f"{prefix}.b_z", shape=(latent,), is_bias=True))
    for output in ("mu", "sigma"):
        shapes.append(ParameterShape(name=f"{prefix}.W_{output}", shape=(latent, latent)))
        shapes.append(
            ParameterShape(name=f"{prefix}.b_{output}", shape=(latent,), is_bias=True)
        )
    return shapes


def parameter_table(
    variant: ModelVariant, dimensions: ModelDimensions, latent_bypass: bool = False
) -> "OrderedDict[str, ParameterShape]":
    """
    Lists the parameters of a variant in their canonical order.

    :param variant: model variant
    :param dimensions: layer sizes and vocabulary sizes
    :param latent_bypass: feed the latent sample to the decoder directly
    :return: parameter shapes by name
    """
    d = dimensions
    shapes: List[ParameterShape] = [
        ParameterShape(name="source_embedding", shape=(d.word, d.source_vocabulary)),
        ParameterShape(name="target_embedding", shape=(d.word, d.target_vocabulary)),
    ]
    shapes += bidirectional_parameter_shapes("source_encoder", d.word, d.hidden)

    components = variant.semantic_components
    if variant.has_inferrer:
        shapes += bidirectional_parameter_shapes("target_encoder", d.word, d.hidden)
    if variant.uses_images:
        shapes += [
            ParameterShape(name="image.W_pi", shape=(d.image, d.image_features)),
            ParameterShape(name="image.b_pi", shape=(d.image,), is_bias=True),
        ]
    if variant is ModelVariant.G_O_RNN:
        shapes += bidirectional_parameter_shapes("image_encoder", d.image, d.image)

    latent_blocks: Dict[str, int] = {}
    if variant.has_inferrer:
        blocks = {component: d.component_size(component) for component in components}
        shapes += gaussian_parameter_shapes("posterior", blocks, d.latent)
        shapes += gaussian_parameter_shapes("prior", {SOURCE: d.hidden}, d.latent)
        if latent_bypass:
            latent_blocks = {"latent": d.latent}
        else:
            latent_blocks = blocks
            for component, size in blocks.items():
                shapes.append(
                    ParameterShape(
                        name=f"latent.W_z2.{component}", shape=(size, d.latent)
                    )
                )
                shapes.append(
                    ParameterShape(
                        name=f"latent.b_z2.{component}", shape=(size,), is_bias=True
                    )
                )

    shapes.append(ParameterShape(name="decoder.W_init", shape=(d.hidden, d.hidden)))
    for gate in ("W", "W_r", "W_o"):
        shapes.append(
            ParameterShape(name=f"decoder.gru1.{gate}", shape=(d.hidden, d.word))
        )
    for gate in ("U", "U_r", "U_o"):
        shapes.append(
            ParameterShape(name=f"decoder.gru1.{gate}", shape=(d.hidden, d.hidden))
        )
    shapes += [
        ParameterShape(name="decoder.attention.W_catt", shape=(d.hidden, d.hidden)),
        ParameterShape(name="decoder.attention.W_att", shape=(d.hidden, d.hidden)),
        ParameterShape(name="decoder.attention.U_att", shape=(1, d.hidden)),
    ]
    for gate in ("W", "W_r", "W_o", "U", "U_r", "U_o"):
        shapes.append(
            ParameterShape(name=f"decoder.gru2.{gate}", shape=(d.hidden, d.hidden))
        )
    for gate in ("V", "V_r", "V_o"):
        for component, size in latent_blocks.items():
            shapes.append(
                ParameterShape(
                    name=f"decoder.gru2.{gate}.{component}", shape=(d.hidden, size)
                )
            )
    shapes += [
        ParameterShape(name="decoder.output.L_u", shape=(d.target_vocabulary, d.word)),
        ParameterShape(name="decoder.output.L_s", shape=(d.word, d.hidden)),
        ParameterShape(name="decoder.output.L_x", shape=(d.word, d.hidden)),
    ]
    return OrderedDict((shape.name, shape) for shape in shapes)


class ParameterMatchReport(BaseModel):
    missing: List[str]
    extra: List[str]
    mismatched: List[str]

    @property
    def matches(self) -> bool:
        return not (self.missing or self.extra or self.mismatched)

    def raise_for_mismatch(self):
        if not self.matches:
            raise ParameterMismatchError(self.missing, self.extra, self.mismatched)


def match_parameters(
    expected: Dict[str, ParameterShape], provided: Dict[str, np.ndarray]
) -> ParameterMatchReport:
    """
    Compares a set of arrays with the parameters a model expects.

    :param expected: parameter table of the model
    :param provided: arrays by name, e.g. read from a checkpoint
    :return: names that are missing, unexpected or of the wrong shape
    """
    return ParameterMatchReport(
        missing=[name for name in expected if name not in provided],
        extra=[name for name in provided if name not in expected],
        mismatched=[
            name
            for name, shape in expected.items()
            if name in provided and tuple(provided[name].shape) != shape.shape
        ],
    )

"""
Assembly of the encoders, the inferrer and the decoder into the variational
translation model and its training objective.
"""
import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, validator

from mvnmt.decoder.conditional_gru import (
    AttentionMemory,
    DecoderParameters,
    decode_teacher_forced,
    initial_state,
    prepare_attention,
)
from mvnmt.image_encoder.image_encoder import (
    ImageParameters,
    build_semantic,
    encode_image,
    fuse_txt,
)
from mvnmt.image_encoder.image_features import ImageFeatureBatch
from mvnmt.inferrer.gaussian import (
    GaussianDiag,
    LatentSample,
    kl_divergence,
    latent_for_translation,
    reparameterize,
)
from mvnmt.inferrer.inferrer import (
    GaussianNetworkParameters,
    LatentProjectionParameters,
    posterior_params,
    prior_params,
    project_to_target,
)
from mvnmt.model_parameters import (
    SOURCE,
    ModelVariant,
    ParameterShape,
    match_parameters,
    parameter_table,
)
from mvnmt.numeric_core import ops
from mvnmt.numeric_core.errors import (
    ConfigurationError,
    ContractError,
    ParameterMismatchError,
)
from mvnmt.numeric_core.graph import Graph, Node
from mvnmt.text_encoder.gru import GruParameters, encode_bidirectional
from mvnmt.text_encoder.sequence_batch import SequenceBatch
from mvnmt.text_encoder.text_encoder import EncoderOutput, embed, mean_pool
from mvnmt.trainer.checkpoint import Checkpoint
from mvnmt.trainer.training_config import TrainingConfig


class TrainingBatch(BaseModel):
    source: SequenceBatch
    target: SequenceBatch
    images: Optional[ImageFeatureBatch] = None

    @property
    def size(self) -> int:
        return self.source.size

    def repeat(self, count: int) -> "TrainingBatch":
        return TrainingBatch(
            source=self.source.repeat(count),
            target=self.target.repeat(count),
            images=None if self.images is None else self.images.repeat(count),
        )


class ObjectiveTerms(BaseModel):
    """
    :param loss: scalar minimized during training
    :param log_likelihood: (B,) teacher-forced log-likelihood per sentence
    :param kl: (B,) KL divergence per sentence, None without a latent
    """

    loss: Node
    log_likelihood: Node
    kl: Optional[Node] = None
    posterior: Optional[GaussianDiag] = None
    prior: Optional[GaussianDiag] = None

    class Config:
        arbitrary_types_allowed = True


class TranslationContext(BaseModel):
    """Everything beam search needs that does not depend on the target prefix."""

    memory: AttentionMemory
    initial_state: Node
    h_e_target: Optional[Node] = None
    decoder: DecoderParameters

    class Config:
        arbitrary_types_allowed = True


class FineTuneReport(BaseModel):
    carried_over: List[str]
    freshly_initialized: List[str]
    ignored: List[str]


class MultimodalVnmt(BaseModel):
    """
    Variational translation model with optional image information in the
    posterior.
    """

    config: TrainingConfig

    @validator("config")
    def vocabularies_known(cls, config):
        if config.source_vocab_size < 2 or config.target_vocab_size < 2:
            raise ValueError("Vocabulary sizes must be set before building a model")
        return config

    @property
    def variant(self) -> ModelVariant:
        return self.config.variant

    def parameter_shapes(self) -> "OrderedDict[str, ParameterShape]":
        return parameter_table(
            self.variant,
            self.config.dimensions(),
            latent_bypass=self.config.latent_bypass,
        )

    @property
    def latent_components(self) -> Tuple[str, ...]:
        if not self.variant.has_inferrer:
            return ()
        if self.config.latent_bypass:
            return ("latent",)
        return self.variant.semantic_components

    def init_params(self, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        """
        Draws every weight from N(0, init_std^2) in table order; biases are zero.
        """
        parameters = OrderedDict()
        for name, shape in self.parameter_shapes().items():
            draw = rng.normal(0.0, self.config.init_std, size=shape.shape)
            parameters[name] = np.zeros(shape.shape) if shape.is_bias else draw
        return parameters

    def _encoder(
        self, nodes: Dict[str, Node], prefix: str
    ) -> Tuple[GruParameters, GruParameters]:
        return (
            GruParameters.from_nodes(nodes, prefix + ".forward"),
            GruParameters.from_nodes(nodes, prefix + ".backward"),
        )

    def encode_source(
        self, nodes: Dict[str, Node], source: SequenceBatch
    ) -> EncoderOutput:
        forward, backward = self._encoder(nodes, "source_encoder")
        states = encode_bidirectional(
            embed(nodes["source_embedding"], source), source.mask, forward, backward
        )
        return EncoderOutput(
            states=states, mask=source.mask, pooled=mean_pool(states, source.mask)
        )

    def prior(self, nodes: Dict[str, Node], encoder: EncoderOutput) -> GaussianDiag:
        return prior_params(
            encoder.pooled,
            GaussianNetworkParameters.from_nodes(nodes, "prior", (SOURCE,)),
            self.config.clamp_log_var,
        )

    def semantic_representation(
        self, nodes: Dict[str, Node], batch: TrainingBatch, encoder: EncoderOutput
    ) -> Node:
        variant = self.variant
        target_encoder = self._encoder(nodes, "target_encoder")
        target_embedded = embed(nodes["target_embedding"], batch.target)
        if variant.uses_images and batch.images is None:
            raise ContractError("Variant {} needs image features".format(variant.value))
        if variant is ModelVariant.G_O_TXT:
            h_f, h_g = fuse_txt(
                embed(nodes["source_embedding"], batch.source),
                batch.source.mask,
                target_embedded,
                batch.target.mask,
                batch.images,
                ImageParameters.from_nodes(nodes),
                self._encoder(nodes, "source_encoder"),
                target_encoder,
            )
            return build_semantic(h_f, h_g, None, variant).h_e
        target_states = encode_bidirectional(
            target_embedded, batch.target.mask, *target_encoder
        )
        h_g = mean_pool(target_states, batch.target.mask)
        h_pi = None
        if variant.uses_images:
            h_pi = encode_image(
                variant,
                batch.images,
                ImageParameters.from_nodes(nodes),
                encoder.pooled.graph,
            )
        return build_semantic(encoder.pooled, h_g, h_pi, variant).h_e

    def posterior(
        self, nodes: Dict[str, Node], batch: TrainingBatch, encoder: EncoderOutput
    ) -> GaussianDiag:
        return posterior_params(
            self.semantic_representation(nodes, batch, encoder),
            GaussianNetworkParameters.from_nodes(
                nodes, "posterior", self.variant.semantic_components
            ),
            self.config.clamp_log_var,
        )

    def project_latent(self, nodes: Dict[str, Node], sample: LatentSample) -> Node:
        if self.config.latent_bypass:
            return sample.h_z
        return project_to_target(
            sample, LatentProjectionParameters.from_nodes(nodes, self.latent_components)
        )

    def decoder_parameters(self, nodes: Dict[str, Node]) -> DecoderParameters:
        return DecoderParameters.from_nodes(nodes, self.latent_components)

    def log_likelihood(
        self,
        nodes: Dict[str, Node],
        encoder: EncoderOutput,
        target: SequenceBatch,
        h_e_target: Optional[Node],
    ) -> Node:
        return decode_teacher_forced(
            encoder,
            h_e_target,
            target,
            self.decoder_parameters(nodes),
            self.config.gate_fix,
        )

    def l2_penalty(self, nodes: Dict[str, Node]) -> Node:
        return ops.add_n([ops.reduce_sum(ops.mul(node, node)) for node in nodes.values()])

    def objective(
        self,
        graph: Graph,
        nodes: Dict[str, Node],
        batch: TrainingBatch,
        epsilon: Optional[np.ndarray],
    ) -> ObjectiveTerms:
        """
        Negative evidence lower bound averaged over the sentences of a batch,
        plus the L2 penalty on every parameter.

        .. math::

            \\mathcal{L} = \\frac{1}{B} \\sum_b \\left[ KL(q(z|x_b, y_b, \\pi_b) \\| p(z|x_b))
                - \\log p(y_b | z_b, x_b) \\right] + c \\sum \\|\\theta\\|^2

        :param epsilon: (B, d_z) standard normal noise; None samples the posterior mean
        """
        encoder = self.encode_source(nodes, batch.source)
        kl = posterior = prior = None
        h_e_target = None
        if self.variant.has_inferrer:
            prior = self.prior(nodes, encoder)
            posterior = self.posterior(nodes, batch, encoder)
            kl = kl_divergence(posterior, prior)
            if epsilon is None:
                sample = latent_for_translation(posterior)
            else:
                sample = reparameterize(posterior, epsilon)
            h_e_target = self.project_latent(nodes, sample)
        log_likelihood = self.log_likelihood(nodes, encoder, batch.target, h_e_target)
        if kl is None:
            per_sentence = ops.scale(log_likelihood, -1.0)
        else:
            per_sentence = ops.sub(kl, log_likelihood)
        loss = ops.reduce_mean(per_sentence)
        if self.config.decay_c > 0.0:
            loss = ops.add(loss, ops.scale(self.l2_penalty(nodes), self.config.decay_c))
        return ObjectiveTerms(
            loss=loss,
            log_likelihood=log_likelihood,
            kl=kl,
            posterior=posterior,
            prior=prior,
        )

    def translation_context(
        self, graph: Graph, parameters: Dict[str, np.ndarray], source: SequenceBatch
    ) -> TranslationContext:
        """
        Encodes the source and decodes from the prior mean; posterior and
        image parameters are not read.
        """
        nodes = {name: graph.constant(value) for name, value in parameters.items()}
        encoder = self.encode_source(nodes, source)
        h_e_target = None
        if self.variant.has_inferrer:
            h_e_target = self.project_latent(
                nodes, latent_for_translation(self.prior(nodes, encoder))
            )
        decoder = self.decoder_parameters(nodes)
        return TranslationContext(
            memory=prepare_attention(encoder, decoder),
            initial_state=initial_state(encoder.pooled, decoder),
            h_e_target=h_e_target,
            decoder=decoder,
        )


def init_params(
    config: TrainingConfig, rng: np.random.Generator
) -> Dict[str, np.ndarray]:
    return MultimodalVnmt(config=config).init_params(rng)


def elbo_objective(
    config: TrainingConfig,
    parameters: Dict[str, np.ndarray],
    batch: TrainingBatch,
    epsilon: Optional[np.ndarray],
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Evaluates the training loss and its gradient for one batch.

    :return: loss value and gradient per parameter
    """
    graph = Graph()
    nodes = graph.parameters_from(parameters)
    terms = MultimodalVnmt(config=config).objective(graph, nodes, batch, epsilon)
    return float(terms.loss.value), graph.backward(terms.loss)


def initialize_parameters(
    model: MultimodalVnmt,
    rng: np.random.Generator,
    initial: Optional[Checkpoint] = None,
) -> Tuple[Dict[str, np.ndarray], FineTuneReport]:
    """
    Draws fresh parameters and overwrites those a checkpoint provides under the
    same name. The random draws do not depend on the checkpoint.

    :raises ParameterMismatchError: a shared name has a different shape
    """
    parameters = model.init_params(rng)
    if initial is None:
        return parameters, FineTuneReport(
            carried_over=[], freshly_initialized=list(parameters), ignored=[]
        )
    report = match_parameters(model.parameter_shapes(), initial.parameters)
    if report.mismatched:
        raise ParameterMismatchError([], [], report.mismatched)
    carried = [name for name in parameters if name in initial.parameters]
    for name in carried:
        parameters[name] = np.array(initial.parameters[name], dtype=np.float64)
    fine_tune = FineTuneReport(
        carried_over=carried, freshly_initialized=report.missing, ignored=report.extra
    )
    logging.info(
        "Initialized %s from a %s checkpoint: "
        "%d parameters carried over, %d fresh, %d ignored",
        model.variant.value,
        initial.variant.value,
        len(fine_tune.carried_over),
        len(fine_tune.freshly_initialized),
        len(fine_tune.ignored),
    )
    if fine_tune.freshly_initialized:
        logging.debug("Freshly initialized: %s", ", ".join(fine_tune.freshly_initialized))
    return parameters, fine_tune


def load_model_parameters(
    config: TrainingConfig, checkpoint: Checkpoint
) -> Dict[str, np.ndarray]:
    """
    Takes the parameters of a checkpoint for exactly the configured model.

    :raises ParameterMismatchError: names or shapes differ
    """
    model = MultimodalVnmt(config=config)
    match_parameters(model.parameter_shapes(), checkpoint.parameters).raise_for_mismatch()
    if checkpoint.variant is not config.variant:
        raise ConfigurationError(
            "Checkpoint holds variant {}, configuration asks for {}".format(
                checkpoint.variant.value, config.variant.value
            )
        )
    return {name: checkpoint.parameters[name] for name in model.parameter_shapes()}

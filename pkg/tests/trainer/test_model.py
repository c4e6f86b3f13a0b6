import numpy as np
import pytest

from mvnmt.decoder.conditional_gru import (
    decoder_step,
    initial_state,
    prepare_attention,
    previous_word_embeddings,
)
from mvnmt.inferrer.gaussian import latent_for_translation
from mvnmt.model_parameters import ModelVariant
from mvnmt.numeric_core.errors import (
    ConfigurationError,
    ContractError,
    ParameterMismatchError,
)
from mvnmt.numeric_core.graph import Graph
from mvnmt.trainer.checkpoint import Checkpoint
from mvnmt.trainer.model import (
    MultimodalVnmt,
    TrainingBatch,
    elbo_objective,
    init_params,
    initialize_parameters,
    load_model_parameters,
)
from mvnmt.trainer.toy import toy_batch, toy_config
from tests.utils import TestUtils

ALL_VARIANTS = [pytest.param(variant, id=variant.value) for variant in ModelVariant]


def objective_terms(model: MultimodalVnmt, parameters: dict, batch, epsilon):
    graph = Graph()
    return model.objective(graph, graph.parameters_from(parameters), batch, epsilon)


def zero_parameters(model: MultimodalVnmt) -> dict:
    shapes = model.parameter_shapes()
    return {name: np.zeros(shape.shape) for name, shape in shapes.items()}


def with_other_images(batch: TrainingBatch, config, rng) -> TrainingBatch:
    other = toy_batch(config, rng, size=batch.size)
    return TrainingBatch(source=batch.source, target=batch.target, images=other.images)


def translation_contexts(model: MultimodalVnmt, parameters: dict, batch) -> np.ndarray:
    """Attention contexts of every target step when decoding from the prior mean."""
    graph = Graph()
    nodes = {name: graph.constant(value) for name, value in parameters.items()}
    encoder = model.encode_source(nodes, batch.source)
    h_e_target = model.project_latent(
        nodes, latent_for_translation(model.prior(nodes, encoder))
    )
    decoder = model.decoder_parameters(nodes)
    memory = prepare_attention(encoder, decoder)
    s = initial_state(encoder.pooled, decoder)
    contexts = []
    for y_prev in previous_word_embeddings(batch.target, decoder):
        state, _ = decoder_step(s, y_prev, memory, h_e_target, decoder)
        s = state.s
        contexts.append(state.context.value)
    return np.stack(contexts)


class TestParameterTable:
    @pytest.mark.unittest
    @pytest.mark.parametrize(
        "variant, present, absent",
        [
            pytest.param(
                ModelVariant.NMT,
                ["source_encoder.forward.W", "decoder.gru2.U"],
                ["target_encoder.forward.W", "posterior.b_z", "decoder.gru2.V.source"],
                id="nmt",
            ),
            pytest.param(
                ModelVariant.VNMT,
                ["posterior.W_z.target", "prior.W_z.source", "latent.W_z2.target"],
                ["image.W_pi", "posterior.W_z.image"],
                id="vnmt",
            ),
            pytest.param(
                ModelVariant.G,
                ["image.W_pi", "posterior.W_z.image", "decoder.gru2.V_o.image"],
                ["image_encoder.forward.W"],
                id="global image",
            ),
            pytest.param(
                ModelVariant.G_O_RNN,
                ["image_encoder.forward.W", "image_encoder.backward.U_r"],
                [],
                id="recurrent",
            ),
            pytest.param(
                ModelVariant.G_O_TXT,
                ["image.W_pi", "posterior.W_z.target"],
                ["posterior.W_z.image", "latent.W_z2.image"],
                id="prefix",
            ),
        ],
    )
    def test_names_per_variant(self, variant, present, absent):
        names = MultimodalVnmt(config=toy_config(variant)).parameter_shapes()
        assert all(name in names for name in present)
        assert not any(name in names for name in absent)

    @pytest.mark.unittest
    def test_shapes_follow_the_dimensions(self):
        config = toy_config(ModelVariant.G)
        shapes = MultimodalVnmt(config=config).parameter_shapes()

        assert shapes["source_embedding"].shape == (6, 5)
        assert shapes["source_encoder.forward.U"].shape == (4, 4)
        assert shapes["image.W_pi"].shape == (6, 7)
        assert shapes["posterior.W_z.image"].shape == (4, 6)
        assert shapes["latent.W_z2.source"].shape == (8, 4)
        assert shapes["decoder.gru2.V.image"].shape == (8, 6)
        assert shapes["decoder.attention.U_att"].shape == (1, 8)
        assert shapes["decoder.output.L_u"].shape == (5, 6)

    @pytest.mark.unittest
    def test_latent_bypass_feeds_the_sample_directly(self):
        model = MultimodalVnmt(config=toy_config(ModelVariant.VNMT, latent_bypass=True))
        shapes = model.parameter_shapes()

        assert model.latent_components == ("latent",)
        assert not any(name.startswith("latent.W_z2") for name in shapes)
        assert shapes["decoder.gru2.V.latent"].shape == (8, 4)

    @pytest.mark.unittest
    def test_model_needs_vocabulary_sizes(self):
        with pytest.raises(ValueError):
            MultimodalVnmt(config=toy_config(ModelVariant.VNMT, source_vocab_size=0))


class TestInitialization:
    @pytest.mark.unittest
    def test_weights_are_drawn_with_the_configured_spread(self):
        config = toy_config(ModelVariant.VNMT, dim_word=200, source_vocab_size=500)
        parameters = init_params(config, np.random.default_rng(3))

        assert np.var(parameters["source_embedding"]) == pytest.approx(0.01, rel=0.02)
        assert np.mean(parameters["source_embedding"]) == pytest.approx(0.0, abs=1e-3)
        for name, shape in MultimodalVnmt(config=config).parameter_shapes().items():
            if shape.is_bias:
                np.testing.assert_array_equal(parameters[name], 0.0)

    @pytest.mark.unittest
    def test_same_seed_gives_the_same_parameters(self):
        config = toy_config(ModelVariant.G_O_RNN)
        first = init_params(config, np.random.default_rng(11))
        second = init_params(config, np.random.default_rng(11))

        assert list(first) == list(second)
        for name in first:
            np.testing.assert_array_equal(first[name], second[name])


class TestObjective:
    @pytest.mark.unittest
    @pytest.mark.parametrize("variant", ALL_VARIANTS)
    def test_zero_parameters_give_a_uniform_decoder(self, variant):
        config = toy_config(variant, decay_c=0.0)
        model = MultimodalVnmt(config=config)
        batch = toy_batch(config, np.random.default_rng(0))
        epsilon = np.zeros((batch.size, config.dimv))

        terms = objective_terms(model, zero_parameters(model), batch, epsilon)

        lengths = batch.target.lengths
        expected = np.mean(lengths) * np.log(config.target_vocab_size)
        assert float(terms.loss.value) == pytest.approx(expected, rel=1e-12)
        if variant.has_inferrer:
            np.testing.assert_allclose(terms.kl.value, 0.0, atol=1e-15)
        else:
            assert terms.kl is None

    @pytest.mark.unittest
    @pytest.mark.parametrize("variant", ALL_VARIANTS)
    def test_loss_is_mean_of_kl_minus_log_likelihood(self, variant):
        config = toy_config(variant, decay_c=0.0)
        model = MultimodalVnmt(config=config)
        rng = np.random.default_rng(5)
        parameters = model.init_params(rng)
        batch = toy_batch(config, rng)

        terms = objective_terms(
            model, parameters, batch, rng.standard_normal((batch.size, config.dimv))
        )

        kl = 0.0 if terms.kl is None else terms.kl.value
        assert float(terms.loss.value) == pytest.approx(
            np.mean(kl - terms.log_likelihood.value), rel=1e-12
        )

    @pytest.mark.unittest
    def test_l2_penalty_is_added(self):
        rng = np.random.default_rng(2)
        plain = MultimodalVnmt(config=toy_config(ModelVariant.NMT, decay_c=0.0))
        decayed = MultimodalVnmt(config=toy_config(ModelVariant.NMT, decay_c=0.01))
        parameters = plain.init_params(rng)
        batch = toy_batch(plain.config, rng)

        with_decay = objective_terms(decayed, parameters, batch, None).loss.value
        without_decay = objective_terms(plain, parameters, batch, None).loss.value
        difference = float(with_decay) - float(without_decay)

        squares = sum(float(np.sum(value ** 2)) for value in parameters.values())
        assert difference == pytest.approx(0.01 * squares, rel=1e-10)

    @pytest.mark.unittest
    def test_no_noise_equals_zero_noise(self):
        config = toy_config(ModelVariant.G_O_AVG)
        model = MultimodalVnmt(config=config)
        rng = np.random.default_rng(8)
        parameters = model.init_params(rng)
        batch = toy_batch(config, rng)

        mean = objective_terms(model, parameters, batch, None)
        zero = objective_terms(
            model, parameters, batch, np.zeros((batch.size, config.dimv))
        )

        assert float(mean.loss.value) == float(zero.loss.value)

    @pytest.mark.unittest
    def test_image_variant_needs_images(self):
        config = toy_config(ModelVariant.G)
        model = MultimodalVnmt(config=config)
        rng = np.random.default_rng(0)
        batch = toy_batch(config, rng)
        without_images = TrainingBatch(source=batch.source, target=batch.target)

        with pytest.raises(ContractError):
            objective_terms(model, model.init_params(rng), without_images, None)

    @pytest.mark.unittest
    @pytest.mark.parametrize("seed", range(20))
    def test_prefix_variant_keeps_images_out_of_the_prior(self, seed):
        config = toy_config(ModelVariant.G_O_TXT)
        model = MultimodalVnmt(config=config)
        rng = np.random.default_rng(seed)
        parameters = model.init_params(rng)
        batch = toy_batch(config, rng)
        swapped = with_other_images(batch, config, rng)

        first = objective_terms(model, parameters, batch, None)
        second = objective_terms(model, parameters, swapped, None)

        np.testing.assert_array_equal(first.prior.mu.value, second.prior.mu.value)
        np.testing.assert_array_equal(
            first.prior.log_var.value, second.prior.log_var.value
        )
        np.testing.assert_array_equal(
            translation_contexts(model, parameters, batch),
            translation_contexts(model, parameters, swapped),
        )
        assert not np.array_equal(first.posterior.mu.value, second.posterior.mu.value)

    @pytest.mark.unittest
    @pytest.mark.parametrize(
        "variant", [ModelVariant.G, ModelVariant.G_O_AVG, ModelVariant.G_O_RNN]
    )
    @pytest.mark.parametrize("seed", range(20))
    def test_images_reach_the_posterior(self, variant, seed):
        config = toy_config(variant)
        model = MultimodalVnmt(config=config)
        rng = np.random.default_rng(seed)
        parameters = model.init_params(rng)
        batch = toy_batch(config, rng)
        swapped = with_other_images(batch, config, rng)

        first = objective_terms(model, parameters, batch, None)
        second = objective_terms(model, parameters, swapped, None)

        np.testing.assert_array_equal(first.prior.mu.value, second.prior.mu.value)
        assert not np.array_equal(first.posterior.mu.value, second.posterior.mu.value)

    @pytest.mark.unittest
    def test_elbo_objective_returns_a_gradient_per_parameter(self):
        config = toy_config(ModelVariant.VNMT)
        rng = np.random.default_rng(6)
        parameters = init_params(config, rng)
        batch = toy_batch(config, rng)

        loss, gradients = elbo_objective(
            config, parameters, batch, np.zeros((2, config.dimv))
        )

        assert np.isfinite(loss)
        assert set(gradients) == set(parameters)
        for name, gradient in gradients.items():
            assert gradient.shape == parameters[name].shape

    @pytest.mark.unittest
    @pytest.mark.parametrize("variant", ALL_VARIANTS)
    def test_gradients_match_finite_differences(self, variant):
        config = toy_config(variant, init_std=0.5)
        model = MultimodalVnmt(config=config)
        rng = np.random.default_rng(12)
        parameters = model.init_params(rng)
        batch = toy_batch(config, rng)
        epsilon = rng.standard_normal((batch.size, config.dimv))

        TestUtils.assert_gradients_match(
            lambda graph, nodes: model.objective(graph, nodes, batch, epsilon).loss,
            parameters,
            max_elements_per_parameter=3,
            seed=1,
        )

    @pytest.mark.unittest
    def test_gradients_with_latent_bypass(self):
        config = toy_config(ModelVariant.G, latent_bypass=True, init_std=0.5)
        model = MultimodalVnmt(config=config)
        rng = np.random.default_rng(13)
        parameters = model.init_params(rng)
        batch = toy_batch(config, rng)
        epsilon = rng.standard_normal((batch.size, config.dimv))

        TestUtils.assert_gradients_match(
            lambda graph, nodes: model.objective(graph, nodes, batch, epsilon).loss,
            parameters,
            max_elements_per_parameter=3,
        )


class TestFineTuning:
    @pytest.mark.unittest
    def test_translation_weights_carry_over_into_a_variational_model(self):
        source = init_params(toy_config(ModelVariant.NMT), np.random.default_rng(1))
        model = MultimodalVnmt(config=toy_config(ModelVariant.VNMT))
        checkpoint = Checkpoint(variant=ModelVariant.NMT, parameters=source)

        parameters, report = initialize_parameters(
            model, np.random.default_rng(2), checkpoint
        )

        assert report.carried_over == [name for name in parameters if name in source]
        assert set(report.carried_over) == set(source)
        assert report.ignored == []
        assert "posterior.W_z.source" in report.freshly_initialized
        assert "decoder.gru2.V.target" in report.freshly_initialized
        for name in source:
            np.testing.assert_array_equal(parameters[name], source[name])

    @pytest.mark.unittest
    def test_fresh_parameters_do_not_depend_on_the_checkpoint(self):
        model = MultimodalVnmt(config=toy_config(ModelVariant.VNMT))
        source = init_params(toy_config(ModelVariant.NMT), np.random.default_rng(1))

        fresh, _ = initialize_parameters(model, np.random.default_rng(2))
        tuned, _ = initialize_parameters(
            model,
            np.random.default_rng(2),
            Checkpoint(variant=ModelVariant.NMT, parameters=source),
        )

        np.testing.assert_array_equal(fresh["prior.W_mu"], tuned["prior.W_mu"])

    @pytest.mark.unittest
    def test_global_image_checkpoint_into_recurrent_fusion(self):
        source = init_params(toy_config(ModelVariant.G), np.random.default_rng(1))
        model = MultimodalVnmt(config=toy_config(ModelVariant.G_O_RNN))

        _, report = initialize_parameters(
            model,
            np.random.default_rng(2),
            Checkpoint(variant=ModelVariant.G, parameters=source),
        )

        assert report.freshly_initialized
        assert all(
            name.startswith("image_encoder.") for name in report.freshly_initialized
        )
        assert set(report.carried_over) == set(source)

    @pytest.mark.unittest
    def test_shape_mismatch_is_rejected(self):
        source = init_params(
            toy_config(ModelVariant.VNMT, dimv=3), np.random.default_rng(1)
        )
        model = MultimodalVnmt(config=toy_config(ModelVariant.VNMT))

        with pytest.raises(ParameterMismatchError) as error:
            initialize_parameters(
                model,
                np.random.default_rng(2),
                Checkpoint(variant=ModelVariant.VNMT, parameters=source),
            )
        assert "prior.W_mu" in str(error.value)


class TestLoadModelParameters:
    @pytest.mark.unittest
    def test_exact_match_is_loaded_in_table_order(self):
        config = toy_config(ModelVariant.G)
        source = init_params(config, np.random.default_rng(1))
        shuffled = dict(reversed(list(source.items())))

        loaded = load_model_parameters(
            config, Checkpoint(variant=ModelVariant.G, parameters=shuffled)
        )

        assert list(loaded) == list(source)

    @pytest.mark.unittest
    def test_missing_parameters_are_rejected(self):
        config = toy_config(ModelVariant.G_O_RNN)
        source = init_params(toy_config(ModelVariant.G), np.random.default_rng(1))

        with pytest.raises(ParameterMismatchError):
            load_model_parameters(
                config, Checkpoint(variant=ModelVariant.G, parameters=source)
            )

    @pytest.mark.unittest
    def test_variant_must_match(self):
        config = toy_config(ModelVariant.G_O_AVG)
        source = init_params(config, np.random.default_rng(1))

        with pytest.raises(ConfigurationError):
            load_model_parameters(
                config, Checkpoint(variant=ModelVariant.G, parameters=source)
            )

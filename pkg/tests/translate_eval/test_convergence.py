import numpy as np
import pytest

from mvnmt.cli_data.corpus import (
    build_vocab_from_file,
    encode_parallel_corpus,
    read_corpus,
)
from mvnmt.cli_data.feature_file import read_feature_file
from mvnmt.cli_data.synthetic import ImageMode, SyntheticTask, gen_synthetic
from mvnmt.model_parameters import ModelVariant
from mvnmt.trainer.model import MultimodalVnmt
from mvnmt.trainer.trainer import train
from mvnmt.trainer.training_config import TrainingConfig
from mvnmt.translate_eval.evaluation import evaluate_translations
from tests.utils import TestUtils


def synthetic_run(task, image_mode, variant, seed, vocab_size, corpus_size, **settings):
    out_dir = TestUtils.get_output_test_data_dir(
        "convergence/{}_{}_{}_{}".format(task, image_mode, variant, seed)
    )
    files = gen_synthetic(task, vocab_size, corpus_size, image_mode, seed, out_dir)
    source_vocabulary = build_vocab_from_file(files.train.source, vocab_size + 2)
    target_vocabulary = build_vocab_from_file(files.train.target, vocab_size + 2)
    config = TrainingConfig(variant=variant, seed=seed, dim_fc7=64, **settings)
    config = config.with_vocabularies(source_vocabulary.size, target_vocabulary.size)

    def corpus(split):
        features = read_feature_file(split.features) if variant.uses_images else None
        return encode_parallel_corpus(
            read_corpus(split.source, split.target, split.images),
            source_vocabulary,
            target_vocabulary,
            config.maxlen,
            features,
        )

    valid = corpus(files.valid)
    return config, train(config, corpus(files.train), valid), valid


class TestSyntheticConvergence:
    @pytest.mark.acceptancetest
    def test_copy_task_is_learned(self):
        config, result, valid = synthetic_run(
            SyntheticTask.COPY,
            ImageMode.RANDOM,
            ModelVariant.VNMT,
            seed=1,
            vocab_size=12,
            corpus_size=517,
            dim=64,
            dim_word=64,
            dimv=64,
            validate_every=250,
            max_iterations=20000,
        )
        assert len(valid) == 17

        report = evaluate_translations(
            MultimodalVnmt(config=config), result.checkpoint.parameters, valid
        )

        assert report.token_accuracy >= 0.99
        assert report.bleu >= 0.95

    @pytest.mark.acceptancetest
    def test_correlated_images_help_the_lexical_map(self):
        settings = dict(
            vocab_size=12,
            corpus_size=517,
            dim=32,
            dim_word=32,
            dimv=16,
            dim_pic=32,
            validate_every=100,
            max_iterations=2000,
        )
        helped = 0
        for seed in range(5):
            losses = {}
            for mode in (ImageMode.CORRELATED, ImageMode.RANDOM):
                _, result, _ = synthetic_run(
                    SyntheticTask.LEXICAL_MAP, mode, ModelVariant.G, seed=seed, **settings
                )
                losses[mode] = float(np.min(result.curve["val_loss"]))
            helped += losses[ImageMode.CORRELATED] <= losses[ImageMode.RANDOM]
        assert helped >= 4

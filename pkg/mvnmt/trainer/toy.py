"""
Small configurations and random batches used by the gradient and KL checks.
"""
import numpy as np

from mvnmt.image_encoder.image_features import ImageFeatureBatch, ImageFeatureSet
from mvnmt.model_parameters import ModelVariant
from mvnmt.text_encoder.sequence_batch import SequenceBatch
from mvnmt.text_encoder.vocabulary import EOS_ID
from mvnmt.trainer.model import TrainingBatch
from mvnmt.trainer.training_config import TrainingConfig

TOY_SETTINGS = dict(
    dim=8,
    dim_word=6,
    dimv=4,
    dim_pic=6,
    dim_fc7=7,
    source_vocab_size=5,
    target_vocab_size=5,
    batchsize=2,
    maxlen=3,
)


def toy_config(variant: ModelVariant, **overrides) -> TrainingConfig:
    settings = dict(TOY_SETTINGS, variant=variant)
    settings.update(overrides)
    return TrainingConfig(**settings)


def random_sentence(
    rng: np.random.Generator, vocabulary_size: int, max_tokens: int
) -> list:
    """Random ids of real words followed by the end-of-sentence id."""
    length = int(rng.integers(1, max_tokens + 1))
    return rng.integers(1, vocabulary_size, size=length).tolist() + [EOS_ID]


def toy_batch(
    config: TrainingConfig,
    rng: np.random.Generator,
    size: int = 2,
    max_image_rows: int = 3,
) -> TrainingBatch:
    """
    A batch of random sentences of at most ``config.maxlen`` words plus the
    end-of-sentence id, with random image features when the variant uses images.
    """
    images = None
    if config.variant.uses_images:
        images = ImageFeatureBatch.from_feature_sets(
            [
                ImageFeatureSet(
                    vectors=rng.normal(
                        size=(int(rng.integers(1, max_image_rows + 1)), config.dim_fc7)
                    )
                )
                for _ in range(size)
            ]
        )
    return TrainingBatch(
        source=SequenceBatch.from_sequences(
            [
                random_sentence(rng, config.source_vocab_size, config.maxlen)
                for _ in range(size)
            ]
        ),
        target=SequenceBatch.from_sequences(
            [
                random_sentence(rng, config.target_vocab_size, config.maxlen)
                for _ in range(size)
            ]
        ),
        images=images,
    )

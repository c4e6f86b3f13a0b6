"""
Synthetic parallel corpora with image features for desk-scale experiments.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
from pydantic import BaseModel

from mvnmt.cli_data.feature_file import FeatureFile, write_feature_file
from mvnmt.image_encoder.image_features import ImageFeatureSet
from mvnmt.numeric_core.errors import ConfigurationError

VALIDATION_SHARE = 30
MIN_LENGTH = 2
MAX_LENGTH = 12


class SyntheticTask(str, Enum):
    COPY = "copy"
    REVERSE = "reverse"
    LEXICAL_MAP = "lexical-map"


class ImageMode(str, Enum):
    CORRELATED = "correlated"
    RANDOM = "random"


class SplitFiles(BaseModel):
    source: Path
    target: Path
    images: Path
    features: Path


class SyntheticCorpus(BaseModel):
    train: SplitFiles
    valid: SplitFiles
    train_size: int
    valid_size: int


def word_types(vocab_size: int, prefix: str = "w") -> List[str]:
    return ["{}{}".format(prefix, i) for i in range(vocab_size)]


def bag_of_tokens_feature(
    tokens: Sequence[str], types: Sequence[str], dimension: int
) -> np.ndarray:
    """
    Indicator of the word types occurring in a sentence in the leading
    components, zeros after.
    """
    feature = np.zeros(dimension)
    present = set(tokens)
    for i, word in enumerate(types):
        if word in present:
            feature[i] = 1.0
    return feature


def object_features(
    tokens: Sequence[str], types: Sequence[str], dimension: int, count: int
) -> np.ndarray:
    """
    One-hot rows of the distinct tokens of a sentence in order of first
    occurrence, repeated cyclically up to ``count`` rows.
    """
    distinct = list(dict.fromkeys(tokens))
    index = {word: i for i, word in enumerate(types)}
    rows = np.zeros((count, dimension))
    for row in range(count):
        rows[row, index[distinct[row % len(distinct)]]] = 1.0
    return rows


def make_target(
    task: SyntheticTask, source: List[str], mapping: Dict[str, str]
) -> List[str]:
    if task is SyntheticTask.COPY:
        return list(source)
    if task is SyntheticTask.REVERSE:
        return source[::-1]
    return [mapping[word] for word in source]


def _write_split(
    out_dir: Path,
    name: str,
    pairs: List[tuple],
    features: List[ImageFeatureSet],
) -> SplitFiles:
    files = SplitFiles(
        source=out_dir / "{}.src".format(name),
        target=out_dir / "{}.tgt".format(name),
        images=out_dir / "{}.img".format(name),
        features=out_dir / "{}.mvnf".format(name),
    )
    files.source.write_text(
        "".join(" ".join(s) + "\n" for s, _ in pairs), encoding="utf-8"
    )
    files.target.write_text(
        "".join(" ".join(t) + "\n" for _, t in pairs), encoding="utf-8"
    )
    files.images.write_text(
        "".join("{}\n".format(i) for i in range(len(pairs))), encoding="utf-8"
    )
    write_feature_file(FeatureFile.from_feature_sets(features), files.features)
    return files


def gen_synthetic(
    task: SyntheticTask,
    vocab_size: int,
    corpus_size: int,
    image_mode: ImageMode,
    seed: int,
    out_dir: Union[str, Path],
    feature_dim: int = 64,
    objects_per_image: int = 0,
) -> SyntheticCorpus:
    """
    Generates a corpus and writes train and validation splits.

    Sentences have 2 to 12 words. One pair in thirty goes to the validation
    split. Every pair gets its own image whose first row is a bag-of-tokens
    indicator of the source sentence (correlated mode) or uniform noise
    (random mode), followed by ``objects_per_image`` object rows.

    :param task: relation between source and target
    :param vocab_size: number of word types
    :param corpus_size: total number of pairs
    :param image_mode: whether the image carries information about the sentence
    :param seed: seed of every random draw
    :param out_dir: directory receiving the files
    :param feature_dim: length of a feature row
    :param objects_per_image: number of object rows after the global row
    """
    task, image_mode = SyntheticTask(task), ImageMode(image_mode)
    if vocab_size < 3:
        raise ConfigurationError("Synthetic vocabularies need at least 3 word types")
    if corpus_size < 2:
        raise ConfigurationError("A synthetic corpus needs at least 2 pairs")
    if image_mode is ImageMode.CORRELATED and feature_dim < vocab_size:
        raise ConfigurationError(
            "Correlated features need feature_dim >= vocab_size, got {} < {}".format(
                feature_dim, vocab_size
            )
        )
    if objects_per_image < 0:
        raise ConfigurationError("objects_per_image must not be negative")

    rng = np.random.default_rng(seed)
    types = word_types(vocab_size)
    mapped_types = word_types(vocab_size, "v")
    mapping = dict(zip(types, [mapped_types[i] for i in rng.permutation(vocab_size)]))

    pairs, features = [], []
    for _ in range(corpus_size):
        length = int(rng.integers(MIN_LENGTH, MAX_LENGTH + 1))
        source = [types[i] for i in rng.integers(0, vocab_size, size=length)]
        pairs.append((source, make_target(task, source, mapping)))
        if image_mode is ImageMode.CORRELATED:
            rows = [bag_of_tokens_feature(source, types, feature_dim)[None, :]]
            if objects_per_image:
                rows.append(
                    object_features(source, types, feature_dim, objects_per_image)
                )
            vectors = np.concatenate(rows)
        else:
            vectors = rng.random((1 + objects_per_image, feature_dim))
        features.append(ImageFeatureSet(vectors=vectors))

    valid_size = max(1, corpus_size // VALIDATION_SHARE)
    train_size = corpus_size - valid_size
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = SyntheticCorpus(
        train=_write_split(out_dir, "train", pairs[:train_size], features[:train_size]),
        valid=_write_split(out_dir, "valid", pairs[train_size:], features[train_size:]),
        train_size=train_size,
        valid_size=valid_size,
    )
    logging.info(
        "Generated %s task with %d training and %d validation pairs in %s",
        task.value,
        train_size,
        valid_size,
        out_dir,
    )
    return corpus

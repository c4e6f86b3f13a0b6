"""
Reading, tokenizing and encoding parallel corpora.

Tokens are separated by ASCII whitespace only, so encoding does not depend on
the locale or on Unicode whitespace rules. Pre-tokenized or subword-segmented
text can be fed in unchanged.
"""
import logging
import re
from collections import Counter
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from pydantic import BaseModel

from mvnmt.cli_data.feature_file import FeatureFile
from mvnmt.image_encoder.image_features import ImageFeatureBatch
from mvnmt.numeric_core.errors import ConfigurationError, IngestionError
from mvnmt.text_encoder.sequence_batch import TokenSequence
from mvnmt.text_encoder.vocabulary import Vocabulary

_ASCII_WHITESPACE = re.compile("[ \t\n\r\x0b\x0c]+")


def tokenize(line: str) -> List[str]:
    return [token for token in _ASCII_WHITESPACE.split(line) if token]


class CorpusRecord(BaseModel):
    source: str
    target: str
    image_id: int


class EncodedPair(BaseModel):
    source: TokenSequence
    target: TokenSequence
    image_id: int = 0


class ParallelCorpus(BaseModel):
    """Encoded sentence pairs with the feature file their image ids index."""

    pairs: List[EncodedPair]
    features: Optional[FeatureFile] = None
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def images(self, indices: Sequence[int]) -> Optional[ImageFeatureBatch]:
        if self.features is None:
            return None
        return self.features.batch([self.pairs[i].image_id for i in indices])


class EncodedCorpus(BaseModel):
    sequences: List[TokenSequence]
    kept_lines: List[int]
    dropped: int


def read_lines(path: Union[str, Path]) -> List[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as error:
        raise IngestionError("Cannot read {}: {}".format(path, error))
    lines = text.split("\n")
    return lines[:-1] if lines[-1] == "" else lines


def build_vocab(lines: Iterable[str], max_size: int) -> Vocabulary:
    """
    Ranks tokens by frequency, then lexicographically, and keeps the
    ``max_size - 2`` best next to the two reserved ids.
    """
    if max_size < 2:
        raise ConfigurationError("A vocabulary holds at least the two reserved tokens")
    counts = Counter(token for line in lines for token in tokenize(line))
    if not counts:
        raise IngestionError("Cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return Vocabulary.from_words([token for token, _ in ranked[: max_size - 2]])


def build_vocab_from_file(path: Union[str, Path], max_size: int) -> Vocabulary:
    vocabulary = build_vocab(read_lines(path), max_size)
    logging.info("Built vocabulary of %d tokens from %s", vocabulary.size, path)
    return vocabulary


def encode_corpus(
    lines: Sequence[str], vocabulary: Vocabulary, maxlen: int
) -> EncodedCorpus:
    """
    Encodes every line and drops those with more than ``maxlen`` tokens.
    """
    sequences, kept = [], []
    for number, line in enumerate(lines):
        tokens = tokenize(line)
        if len(tokens) > maxlen:
            continue
        sequences.append(vocabulary.encode(tokens))
        kept.append(number)
    dropped = len(lines) - len(kept)
    if dropped:
        logging.info("Dropped %d sentences longer than %d tokens", dropped, maxlen)
    return EncodedCorpus(sequences=sequences, kept_lines=kept, dropped=dropped)


def read_corpus(
    source_path: Union[str, Path],
    target_path: Union[str, Path],
    image_id_path: Optional[Union[str, Path]] = None,
) -> List[CorpusRecord]:
    """
    Reads aligned source, target and image id files.

    :raises IngestionError: line counts differ, a line is empty or an image id is invalid
    """
    sources, targets = read_lines(source_path), read_lines(target_path)
    image_ids = read_lines(image_id_path) if image_id_path is not None else None
    misaligned_images = image_ids is not None and len(image_ids) != len(sources)
    if len(sources) != len(targets) or misaligned_images:
        raise IngestionError(
            "Corpus files are not aligned: {} source, {} target{} lines".format(
                len(sources),
                len(targets),
                "" if image_ids is None else ", {} image id".format(len(image_ids)),
            )
        )
    records = []
    for number, (source, target) in enumerate(zip(sources, targets)):
        if not tokenize(source) or not tokenize(target):
            raise IngestionError("Empty sentence on line {}".format(number + 1))
        image_id = number
        if image_ids is not None:
            try:
                image_id = int(image_ids[number].strip())
            except ValueError:
                raise IngestionError(
                    "Invalid image id {!r} on line {}".format(
                        image_ids[number], number + 1
                    )
                )
        records.append(CorpusRecord(source=source, target=target, image_id=image_id))
    return records


def encode_parallel_corpus(
    records: Sequence[CorpusRecord],
    source_vocabulary: Vocabulary,
    target_vocabulary: Vocabulary,
    maxlen: int,
    features: Optional[FeatureFile] = None,
) -> ParallelCorpus:
    """
    Encodes both sides and keeps the pairs where neither side is too long.

    :raises IngestionError: an image id does not index the feature file
    """
    if features is not None:
        for number, record in enumerate(records):
            if not 0 <= record.image_id < features.image_count:
                raise IngestionError(
                    "Image id {} on line {} is outside the {} images "
                    "of the feature file".format(
                        record.image_id, number + 1, features.image_count
                    )
                )
    sources = encode_corpus([r.source for r in records], source_vocabulary, maxlen)
    targets = encode_corpus([r.target for r in records], target_vocabulary, maxlen)
    source_ids = dict(zip(sources.kept_lines, sources.sequences))
    target_ids = dict(zip(targets.kept_lines, targets.sequences))
    pairs = [
        EncodedPair(
            source=source_ids[number],
            target=target_ids[number],
            image_id=record.image_id,
        )
        for number, record in enumerate(records)
        if number in source_ids and number in target_ids
    ]
    dropped = len(records) - len(pairs)
    if dropped:
        logging.info("Dropped %d sentence pairs longer than %d tokens", dropped, maxlen)
    return ParallelCorpus(pairs=pairs, features=features, dropped=dropped)

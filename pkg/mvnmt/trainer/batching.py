from typing import Iterator, List

import numpy as np
from more_itertools import chunked

from mvnmt.cli_data.corpus import ParallelCorpus
from mvnmt.text_encoder.sequence_batch import SequenceBatch
from mvnmt.trainer.model import TrainingBatch

POOL_FACTOR = 10


def batch_order(
    corpus: ParallelCorpus, batch_size: int, rng: np.random.Generator
) -> List[List[int]]:
    """
    One pass over a corpus in length buckets.

    Sentence indices are shuffled, split into pools of ``POOL_FACTOR`` batches,
    sorted by length within a pool and cut into batches, and the batches are
    shuffled again. All randomness comes from ``rng``.
    """
    order = rng.permutation(len(corpus)).tolist()
    batches = []
    for pool in chunked(order, batch_size * POOL_FACTOR):
        pool.sort(
            key=lambda i: (len(corpus.pairs[i].target), len(corpus.pairs[i].source), i)
        )
        batches.extend(list(batch) for batch in chunked(pool, batch_size))
    return [batches[i] for i in rng.permutation(len(batches))]


def sequential_batches(corpus: ParallelCorpus, batch_size: int) -> Iterator[List[int]]:
    return (list(batch) for batch in chunked(range(len(corpus)), batch_size))


def make_batch(
    corpus: ParallelCorpus, indices: List[int], with_images: bool
) -> TrainingBatch:
    pairs = [corpus.pairs[i] for i in indices]
    return TrainingBatch(
        source=SequenceBatch.from_sequences([pair.source for pair in pairs]),
        target=SequenceBatch.from_sequences([pair.target for pair in pairs]),
        images=corpus.images(indices) if with_images else None,
    )

from typing import List, Sequence

import numpy as np
from pydantic import BaseModel

from mvnmt.numeric_core.errors import ContractError
from mvnmt.text_encoder.vocabulary import EOS_ID

TokenSequence = List[int]


class SequenceBatch(BaseModel):
    """
    Time-major batch of token sequences padded with the end-of-sentence id.

    ``ids`` and ``mask`` have shape (T, B); the mask is 1 on real tokens.
    """

    ids: np.ndarray
    mask: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def from_sequences(cls, sequences: Sequence[Sequence[int]]) -> "SequenceBatch":
        if not sequences or any(len(sequence) == 0 for sequence in sequences):
            raise ContractError("A batch needs at least one non-empty sequence")
        length = max(len(sequence) for sequence in sequences)
        ids = np.full((length, len(sequences)), EOS_ID, dtype=np.int64)
        mask = np.zeros((length, len(sequences)))
        for column, sequence in enumerate(sequences):
            ids[: len(sequence), column] = sequence
            mask[: len(sequence), column] = 1.0
        return cls(ids=ids, mask=mask)

    @property
    def steps(self) -> int:
        return self.ids.shape[0]

    @property
    def size(self) -> int:
        return self.ids.shape[1]

    @property
    def lengths(self) -> np.ndarray:
        return self.mask.sum(axis=0).astype(np.int64)

    def sequences(self) -> List[TokenSequence]:
        return [
            self.ids[: length, column].tolist()
            for column, length in enumerate(self.lengths)
        ]

    def repeat(self, count: int) -> "SequenceBatch":
        """Repeats a single-sentence batch ``count`` times along the batch axis."""
        if self.size != 1:
            raise ContractError("Only a single-sentence batch can be repeated")
        return SequenceBatch(
            ids=np.repeat(self.ids, count, axis=1),
            mask=np.repeat(self.mask, count, axis=1),
        )

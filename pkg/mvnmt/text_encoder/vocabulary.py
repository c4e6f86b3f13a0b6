import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Union

from pydantic import BaseModel, PrivateAttr, validator

from mvnmt.numeric_core.errors import DataFormatError

EOS_ID = 0
UNK_ID = 1
EOS_TOKEN = "</s>"
UNK_TOKEN = "<unk>"


class Vocabulary(BaseModel):
    """
    Bijection between tokens and ids. Id 0 is the end-of-sentence marker and
    id 1 the unknown-word marker.
    """

    tokens: List[str]
    _index: Dict[str, int] = PrivateAttr(default_factory=dict)

    @validator("tokens")
    def reserved_tokens_first(cls, tokens):
        if len(tokens) < 2 or tokens[EOS_ID] != EOS_TOKEN or tokens[UNK_ID] != UNK_TOKEN:
            raise ValueError(
                "Vocabulary must start with {} and {}".format(EOS_TOKEN, UNK_TOKEN)
            )
        if len(set(tokens)) != len(tokens):
            raise ValueError("Vocabulary contains duplicate tokens")
        return tokens

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def index(self) -> Dict[str, int]:
        if not self._index:
            self._index = {token: i for i, token in enumerate(self.tokens)}
        return self._index

    @classmethod
    def from_words(cls, words: Sequence[str]) -> "Vocabulary":
        return cls(tokens=[EOS_TOKEN, UNK_TOKEN] + list(words))

    def encode(self, words: Sequence[str]) -> List[int]:
        """Maps words to ids and appends the end-of-sentence id."""
        index = self.index
        return [index.get(word, UNK_ID) for word in words] + [EOS_ID]

    def decode(self, ids: Sequence[int]) -> List[str]:
        """Maps ids back to words, stopping at the first end-of-sentence id."""
        words = []
        for token_id in ids:
            if token_id == EOS_ID:
                break
            words.append(self.tokens[token_id])
        return words

    def save(self, path: Union[str, Path]):
        Path(path).write_text(
            json.dumps({"tokens": self.tokens}, ensure_ascii=False), encoding="utf-8"
        )
        logging.info("Wrote vocabulary of %d tokens to %s", self.size, path)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        try:
            content = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(tokens=content["tokens"])
        except (ValueError, KeyError, TypeError) as error:
            raise DataFormatError("Cannot read vocabulary {}: {}".format(path, error))

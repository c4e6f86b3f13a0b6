import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from mvnmt.numeric_core.errors import ContractError
from mvnmt.translate_eval.metrics import bleu_corpus, token_accuracy

BUCKET_COLUMNS = ["bucket_lo", "bucket_hi", "count", "bleu", "token_acc"]


class EvalReport(BaseModel):
    bleu: float
    token_accuracy: float
    buckets: Optional[pd.DataFrame] = None

    class Config:
        arbitrary_types_allowed = True

    def write_buckets(self, path: Union[str, Path]):
        if self.buckets is None:
            raise ContractError("The report has no length buckets")
        self.buckets.to_csv(path, index=False, columns=BUCKET_COLUMNS)
        logging.info("Wrote %d length buckets to %s", len(self.buckets), path)


def length_bucket_report(
    hypotheses: Sequence[Sequence[str]],
    references: Sequence[Sequence[str]],
    source_lengths: Sequence[int],
    edges: Sequence[int],
) -> pd.DataFrame:
    """
    Scores per group of source length, one row per half-open bucket
    ``[edges[k], edges[k + 1])``. Empty buckets have count 0 and no scores.

    :raises ContractError: edges are not increasing or a length is outside all buckets
    """
    edges = np.asarray(edges)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ContractError("Bucket edges must be strictly increasing")
    if not len(hypotheses) == len(references) == len(source_lengths):
        raise ContractError("Hypotheses, references and source lengths differ in number")
    lengths = pd.Series(np.asarray(source_lengths))
    buckets = pd.cut(lengths, bins=edges, right=False, labels=False)
    if buckets.isna().any():
        raise ContractError(
            "Source lengths outside [{}, {})".format(edges[0], edges[-1])
        )
    rows = []
    for k in range(edges.size - 1):
        members = np.nonzero((buckets == k).to_numpy())[0]
        bleu = accuracy = np.nan
        if members.size:
            selected_hypotheses = [hypotheses[i] for i in members]
            selected_references = [references[i] for i in members]
            bleu = bleu_corpus(selected_hypotheses, selected_references)
            accuracy = token_accuracy(selected_hypotheses, selected_references)
        rows.append((int(edges[k]), int(edges[k + 1]), int(members.size), bleu, accuracy))
    return pd.DataFrame(rows, columns=BUCKET_COLUMNS)

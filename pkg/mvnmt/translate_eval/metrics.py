"""
Corpus level translation metrics over tokenized sentences.
"""
import math
from typing import List, Sequence

from sacrebleu.metrics import BLEU

from mvnmt.numeric_core.errors import ContractError

MAX_ORDER = 4


def _check_lengths(hypotheses: Sequence, references: Sequence):
    if len(hypotheses) != len(references):
        raise ContractError(
            "Got {} hypotheses for {} references".format(len(hypotheses), len(references))
        )


def bleu_corpus(
    hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]
) -> float:
    """
    Corpus BLEU with one reference per hypothesis and no smoothing, in [0, 1].

    N-gram statistics come from sacrebleu on the given tokens. The score is

    .. math::

        BLEU = BP \\cdot \\exp\\left(\\frac{1}{4}\\sum_{n=1}^{4} \\log p_n\\right), \\quad
        BP = \\min(1, e^{1 - r/c})

    and zero when any order has no match.
    """
    _check_lengths(hypotheses, references)
    if not hypotheses:
        raise ContractError("BLEU needs at least one sentence")
    bleu = BLEU(tokenize="none", smooth_method="none", max_ngram_order=MAX_ORDER)
    statistics = bleu.corpus_score(
        [" ".join(tokens) for tokens in hypotheses],
        [[" ".join(tokens) for tokens in references]],
    )
    if any(total == 0 for total in statistics.totals) or any(
        count == 0 for count in statistics.counts
    ):
        return 0.0
    log_precision = sum(
        math.log(count / total)
        for count, total in zip(statistics.counts, statistics.totals)
    ) / MAX_ORDER
    hypothesis_length, reference_length = statistics.sys_len, statistics.ref_len
    brevity = 1.0 if hypothesis_length >= reference_length else math.exp(
        1.0 - reference_length / hypothesis_length
    )
    return brevity * math.exp(log_precision)


def token_accuracy(
    hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]
) -> float:
    """Share of reference positions where the hypothesis has the same token."""
    _check_lengths(hypotheses, references)
    matches = 0
    for hypothesis, reference in zip(hypotheses, references):
        matches += sum(1 for h, r in zip(hypothesis, reference) if h == r)
    total = sum(len(reference) for reference in references)
    return matches / total if total else 0.0


def ids_to_tokens(ids: Sequence[int]) -> List[str]:
    return [str(token_id) for token_id in ids]

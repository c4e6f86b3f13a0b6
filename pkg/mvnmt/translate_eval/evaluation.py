from typing import List, Optional, Sequence

from tqdm import tqdm

from mvnmt.cli_data.corpus import ParallelCorpus
from mvnmt.text_encoder.vocabulary import EOS_ID
from mvnmt.trainer.model import MultimodalVnmt
from mvnmt.translate_eval.beam_search import beam_search
from mvnmt.translate_eval.metrics import bleu_corpus, ids_to_tokens, token_accuracy
from mvnmt.translate_eval.reports import EvalReport, length_bucket_report


def strip_eos(ids: Sequence[int]) -> List[int]:
    return [token for token in ids if token != EOS_ID]


def translate_corpus(
    model: MultimodalVnmt,
    parameters: dict,
    sources: Sequence[Sequence[int]],
    beam_size: int = 12,
    max_len: Optional[int] = None,
    progress: bool = False,
) -> List[List[int]]:
    """Translates sentence by sentence; output order follows input order."""
    return [
        strip_eos(
            beam_search(
                model,
                parameters,
                source,
                beam_size=beam_size,
                max_len=max_len,
                normalize_length=model.config.normalize_length,
            ).tokens
        )
        for source in tqdm(sources, disable=not progress, desc="translating")
    ]


def evaluate_translations(
    model: MultimodalVnmt,
    parameters: dict,
    corpus: ParallelCorpus,
    beam_size: int = 12,
    edges: Optional[Sequence[int]] = None,
) -> EvalReport:
    """
    Translates the sources of a corpus and scores them against its targets.
    """
    hypotheses = translate_corpus(
        model, parameters, [pair.source for pair in corpus.pairs], beam_size=beam_size
    )
    hypothesis_tokens = [ids_to_tokens(ids) for ids in hypotheses]
    reference_tokens = [ids_to_tokens(strip_eos(pair.target)) for pair in corpus.pairs]
    buckets = None
    if edges is not None:
        buckets = length_bucket_report(
            hypothesis_tokens,
            reference_tokens,
            [len(pair.source) - 1 for pair in corpus.pairs],
            edges,
        )
    return EvalReport(
        bleu=bleu_corpus(hypothesis_tokens, reference_tokens),
        token_accuracy=token_accuracy(hypothesis_tokens, reference_tokens),
        buckets=buckets,
    )

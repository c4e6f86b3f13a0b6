from .beam_search import Hypothesis, beam_search, greedy_decode, next_word_log_probs
from .evaluation import evaluate_translations, translate_corpus
from .metrics import bleu_corpus, token_accuracy
from .reports import BUCKET_COLUMNS, EvalReport, length_bucket_report

from .gru import GruParameters, encode_bidirectional, gru_step, run_gru
from .sequence_batch import SequenceBatch, TokenSequence
from .text_encoder import EncoderOutput, embed, encode_text, mean_pool
from .vocabulary import EOS_ID, EOS_TOKEN, UNK_ID, UNK_TOKEN, Vocabulary

from .conditional_gru import (
    AttentionMemory,
    DecoderParameters,
    DecoderState,
    OutputDistribution,
    attend,
    decode_teacher_forced,
    decoder_step,
    gru1_step,
    gru2_step,
    initial_state,
    output_logits,
    prepare_attention,
    previous_word_embeddings,
)

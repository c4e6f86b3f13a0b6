from .feature_file import (
    FEATURE_MAGIC,
    FeatureFile,
    parse_feature_file,
    read_feature_file,
    write_feature_file,
)
from .corpus import (
    CorpusRecord,
    EncodedCorpus,
    EncodedPair,
    ParallelCorpus,
    build_vocab,
    build_vocab_from_file,
    encode_corpus,
    encode_parallel_corpus,
    read_corpus,
    tokenize,
)
from .checkpoint_io import (
    checkpoint_to_bytes,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
)
from .synthetic import ImageMode, SyntheticTask, gen_synthetic
from .run_config import RunConfig, read_run_config

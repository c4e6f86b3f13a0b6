"""
Command line interface.

Exit codes: 0 success, 1 usage error, 2 data, format or configuration error,
3 failed numerical check or training without a finite validation loss. Logs go
to standard error, data products to files or standard output.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from mvnmt.cli_data.checkpoint_io import load_checkpoint, save_checkpoint
from mvnmt.cli_data.corpus import (
    build_vocab_from_file,
    encode_parallel_corpus,
    read_corpus,
    read_lines,
    tokenize,
)
from mvnmt.cli_data.feature_file import read_feature_file
from mvnmt.cli_data.run_config import TRAINING_FILES, RunConfig, read_run_config
from mvnmt.cli_data.synthetic import ImageMode, SyntheticTask, gen_synthetic
from mvnmt.inferrer.gaussian import GaussianDiag, kl_divergence, monte_carlo_kl
from mvnmt.model_parameters import ModelVariant
from mvnmt.numeric_core.errors import MvnmtError, TrainingError
from mvnmt.numeric_core.gradient_check import check_gradient
from mvnmt.numeric_core.graph import Graph
from mvnmt.plot_training import plot_training_curve
from mvnmt.text_encoder.vocabulary import Vocabulary
from mvnmt.trainer.model import MultimodalVnmt, load_model_parameters
from mvnmt.trainer.toy import toy_batch, toy_config
from mvnmt.trainer.trainer import train, write_training_curve
from mvnmt.translate_eval.evaluation import translate_corpus
from mvnmt.translate_eval.metrics import bleu_corpus, token_accuracy
from mvnmt.translate_eval.reports import length_bucket_report

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CHECK_FAILED = 3

GRADIENT_CHECK_ELEMENTS = 12
KL_TOLERANCE_STANDARD_ERRORS = 3.0

# q = N(mu, exp(log_var)) against p = N(0, 1)
KL_CLOSED_FORMS = {
    "identical": (0.0, 0.0, 0.0),
    "shifted-mean": (1.0, 0.0, 0.5),
    "wide-variance": (0.0, 2.0, (np.e ** 2 - 1.0) / 2.0 - 1.0),
}


class MvnmtArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "{}: error: {}\n".format(self.prog, message))


def _variant(value: str) -> ModelVariant:
    try:
        return ModelVariant(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            "choose from {}".format(", ".join(v.value for v in ModelVariant))
        )


def _run_config(args) -> RunConfig:
    return read_run_config(
        args.config,
        {
            "variant": getattr(args, "variant", None),
            "seed": getattr(args, "seed", None),
            "out_dir": getattr(args, "out", None),
        },
    )


def _vocabulary_paths(config: RunConfig) -> Tuple[Path, Path]:
    """Configured vocabulary files, or those training writes to the output directory."""
    out_dir = Path(config.out_dir)
    return (
        config.source_vocab or out_dir / "source.vocab.json",
        config.target_vocab or out_dir / "target.vocab.json",
    )


def _vocabulary(path: Path, corpus: Path, max_size: int) -> Vocabulary:
    if path.exists():
        return Vocabulary.load(path)
    vocabulary = build_vocab_from_file(corpus, max_size)
    path.parent.mkdir(parents=True, exist_ok=True)
    vocabulary.save(path)
    logging.info("Saved a vocabulary of %d words to %s", vocabulary.size, path)
    return vocabulary


def command_gen_synthetic(args) -> int:
    gen_synthetic(
        SyntheticTask(args.task),
        args.vocab_size,
        args.corpus_size,
        ImageMode(args.image_mode),
        args.seed,
        args.out,
        feature_dim=args.feature_dim,
        objects_per_image=args.objects_per_image,
    )
    return 0


def command_build_vocab(args) -> int:
    vocabulary = build_vocab_from_file(args.input, args.max_size)
    if args.output is None:
        sys.stdout.write("\n".join(vocabulary.tokens) + "\n")
    else:
        vocabulary.save(args.output)
    return 0


def command_train(args) -> int:
    config = _run_config(args)
    required = ["train_source", "train_target", "valid_source", "valid_target"]
    if config.variant.uses_images:
        required = list(TRAINING_FILES)
    config.require(*required)
    source_path, target_path = _vocabulary_paths(config)
    source_vocabulary = _vocabulary(source_path, config.train_source, config.vocab_size)
    target_vocabulary = _vocabulary(target_path, config.train_target, config.vocab_size)
    training = config.training_config().with_vocabularies(
        source_vocabulary.size, target_vocabulary.size
    )

    def corpus(prefix: str):
        features = None
        if training.variant.uses_images:
            features = read_feature_file(
                getattr(config, prefix + "_features"), expected_dimension=training.dim_fc7
            )
        records = read_corpus(
            getattr(config, prefix + "_source"),
            getattr(config, prefix + "_target"),
            getattr(config, prefix + "_images"),
        )
        return encode_parallel_corpus(
            records, source_vocabulary, target_vocabulary, training.maxlen, features
        )

    initial = load_checkpoint(args.init_from) if args.init_from else None
    result = train(
        training, corpus("train"), corpus("valid"), initial, progress=args.progress
    )

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        result.checkpoint,
        out_dir / "{}.ckpt".format(training.variant.value),
        storage=args.storage,
    )
    write_training_curve(result.curve, out_dir / "training_curve.csv")
    plot_training_curve(
        result.curve, out_dir / "training_curve.png", training.variant.value
    )
    return 0


def _load_model(config: RunConfig, checkpoint_path: Path):
    source_path, target_path = _vocabulary_paths(config)
    source_vocabulary = Vocabulary.load(source_path)
    target_vocabulary = Vocabulary.load(target_path)
    training = config.training_config().with_vocabularies(
        source_vocabulary.size, target_vocabulary.size
    )
    parameters = load_model_parameters(training, load_checkpoint(checkpoint_path))
    model = MultimodalVnmt(config=training)
    return model, parameters, source_vocabulary, target_vocabulary


def command_translate(args) -> int:
    config = _run_config(args)
    loaded = _load_model(config, args.checkpoint)
    model, parameters, source_vocabulary, target_vocabulary = loaded
    sources = [
        source_vocabulary.encode(tokenize(line)) for line in read_lines(args.input)
    ]
    translations = translate_corpus(
        model, parameters, sources, beam_size=args.beam, progress=args.progress
    )
    text = "".join(" ".join(target_vocabulary.decode(ids)) + "\n" for ids in translations)
    if args.output is None:
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text, encoding="utf-8")
    return 0


def _bucket_edges(text: str, lengths: List[int]) -> List[int]:
    """Parsed bucket edges, extended by one bucket for sources past the last edge."""
    edges = [int(edge) for edge in text.split(",")]
    longest = max(lengths, default=0)
    if edges and longest >= edges[-1]:
        edges.append(longest + 1)
    return edges


def command_evaluate(args) -> int:
    hypotheses = [tokenize(line) for line in read_lines(args.hypotheses)]
    references = [tokenize(line) for line in read_lines(args.references)]
    scores = pd.DataFrame(
        [
            {
                "bleu": bleu_corpus(hypotheses, references),
                "token_accuracy": token_accuracy(hypotheses, references),
            }
        ]
    )
    sys.stdout.write(scores.to_csv(index=False))
    if args.sources is not None:
        lengths = [len(tokenize(line)) for line in read_lines(args.sources)]
        edges = _bucket_edges(args.buckets, lengths)
        buckets = length_bucket_report(hypotheses, references, lengths, edges)
        out_dir = Path(args.out or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        buckets.to_csv(out_dir / "length_buckets.csv", index=False)
        logging.info("Wrote length bucket report to %s", out_dir / "length_buckets.csv")
    return 0


def command_grad_check(args) -> int:
    config = toy_config(args.variant)
    rng = np.random.default_rng(args.seed)
    model = MultimodalVnmt(config=config)
    parameters = model.init_params(rng)
    batch = toy_batch(config, rng)
    epsilon = rng.standard_normal((batch.size, config.dimv))

    def loss(graph, nodes):
        return model.objective(graph, nodes, batch, epsilon).loss

    report = check_gradient(
        loss, parameters, max_elements_per_parameter=args.max_elements, seed=args.seed
    )
    sys.stdout.write(report.to_dataframe().to_csv(index=False))
    if not report.passed:
        logging.error("Gradient check failed for %s", args.variant.value)
        return EXIT_CHECK_FAILED
    logging.info("Gradient check passed for %s", args.variant.value)
    return 0


def _analytic_kl(q_mu, q_log_var, p_mu, p_log_var) -> float:
    graph = Graph()
    return float(
        kl_divergence(
            GaussianDiag(mu=graph.constant(q_mu), log_var=graph.constant(q_log_var)),
            GaussianDiag(mu=graph.constant(p_mu), log_var=graph.constant(p_log_var)),
        ).value
    )


def command_kl_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, (q_mu, q_log_var, expected) in KL_CLOSED_FORMS.items():
        analytic = _analytic_kl(
            np.array([q_mu]), np.array([q_log_var]), np.zeros(1), np.zeros(1)
        )
        rows.append(
            {
                "case": name,
                "dimension": 1,
                "analytic": analytic,
                "reference": expected,
                "standard_error": 0.0,
                "passed": abs(analytic - expected) <= 1e-12,
            }
        )
    for pair in range(args.pairs):
        dimension = int(rng.integers(1, 5))
        q_mu, p_mu = rng.normal(size=dimension), rng.normal(size=dimension)
        q_log_var, p_log_var = rng.uniform(-1.0, 1.0, size=(2, dimension))
        analytic = _analytic_kl(q_mu, q_log_var, p_mu, p_log_var)
        estimate, standard_error = monte_carlo_kl(
            q_mu, q_log_var, p_mu, p_log_var, args.samples, rng
        )
        rows.append(
            {
                "case": "random-{}".format(pair),
                "dimension": dimension,
                "analytic": analytic,
                "reference": estimate,
                "standard_error": standard_error,
                "passed": abs(analytic - estimate)
                <= KL_TOLERANCE_STANDARD_ERRORS * standard_error,
            }
        )
    table = pd.DataFrame(rows)
    sys.stdout.write(table.to_csv(index=False))
    if not table["passed"].all():
        logging.error(
            "Analytic KL disagrees with its reference in %d cases",
            (~table["passed"]).sum(),
        )
        return EXIT_CHECK_FAILED
    return 0


def build_parser() -> MvnmtArgumentParser:
    parser = MvnmtArgumentParser(
        prog="mvnmt", description=__doc__.strip().splitlines()[0]
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler, help_text: str) -> MvnmtArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    sub = command("gen-synthetic", command_gen_synthetic, "generate a synthetic corpus")
    sub.add_argument("--task", choices=[t.value for t in SyntheticTask], default="copy")
    sub.add_argument("--vocab-size", type=int, default=12)
    sub.add_argument("--corpus-size", type=int, default=517)
    sub.add_argument(
        "--image-mode", choices=[m.value for m in ImageMode], default="correlated"
    )
    sub.add_argument("--feature-dim", type=int, default=64)
    sub.add_argument("--objects-per-image", type=int, default=0)
    sub.add_argument("--seed", type=int, default=1234)
    sub.add_argument("--out", type=Path, required=True)

    sub = command("build-vocab", command_build_vocab, "build a vocabulary from a corpus")
    sub.add_argument("--input", type=Path, required=True)
    sub.add_argument("--max-size", type=int, default=30000)
    sub.add_argument("--output", type=Path)

    sub = command("train", command_train, "train a model")
    sub.add_argument("--config", type=Path, required=True)
    sub.add_argument("--variant", type=_variant)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--init-from", type=Path)
    sub.add_argument("--out", type=Path)
    sub.add_argument("--storage", choices=["float64", "float32"], default="float64")
    sub.add_argument("--progress", action="store_true")

    sub = command("translate", command_translate, "translate sentences with beam search")
    sub.add_argument("--config", type=Path, required=True)
    sub.add_argument("--checkpoint", type=Path, required=True)
    sub.add_argument("--input", type=Path, required=True)
    sub.add_argument("--output", type=Path)
    sub.add_argument("--variant", type=_variant)
    sub.add_argument("--beam", type=int, default=12)
    sub.add_argument("--progress", action="store_true")

    sub = command("evaluate", command_evaluate, "score translations against references")
    sub.add_argument("--hypotheses", type=Path, required=True)
    sub.add_argument("--references", type=Path, required=True)
    sub.add_argument("--sources", type=Path)
    sub.add_argument("--buckets", default="0,10,20,30,40,50")
    sub.add_argument("--out", type=Path)

    sub = command(
        "grad-check", command_grad_check, "compare gradients with finite differences"
    )
    sub.add_argument("--variant", type=_variant, default=ModelVariant.VNMT)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--max-elements", type=int, default=GRADIENT_CHECK_ELEMENTS)

    sub = command("kl-check", command_kl_check, "compare analytic KL with Monte Carlo")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--samples", type=int, default=10 ** 6)
    sub.add_argument("--pairs", type=int, default=20)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return exit_request.code if isinstance(exit_request.code, int) else EXIT_USAGE
    try:
        return args.handler(args)
    except TrainingError as error:
        logging.error("%s", error)
        return EXIT_CHECK_FAILED
    except (MvnmtError, OSError) as error:
        logging.error("%s", error)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""
Training loop: Adadelta updates on the negative evidence lower bound,
periodic validation and early stopping.
"""
import logging
import math
import sys
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel
from tqdm import tqdm

from mvnmt.cli_data.corpus import ParallelCorpus
from mvnmt.numeric_core.errors import ContractError, IngestionError, TrainingError
from mvnmt.numeric_core.graph import Graph
from mvnmt.trainer.adadelta import OptimizerState, adadelta_update
from mvnmt.trainer.batching import batch_order, make_batch, sequential_batches
from mvnmt.trainer.checkpoint import Checkpoint
from mvnmt.trainer.early_stopping import EarlyStopping
from mvnmt.trainer.model import FineTuneReport, MultimodalVnmt, initialize_parameters
from mvnmt.trainer.training_config import TrainingConfig

CURVE_COLUMNS = ["iteration", "train_loss", "val_loss"]


class TrainingResult(BaseModel):
    checkpoint: Checkpoint
    curve: pd.DataFrame
    stopped_early: bool
    iterations: int
    fine_tune: FineTuneReport

    class Config:
        arbitrary_types_allowed = True


def _check_corpus(model: MultimodalVnmt, corpus: ParallelCorpus, name: str):
    if not len(corpus):
        raise IngestionError("The {} corpus is empty".format(name))
    if model.variant.uses_images:
        if corpus.features is None:
            raise IngestionError(
                "Variant {} needs image features for the {} corpus".format(
                    model.variant.value, name
                )
            )
        if corpus.features.dimension != model.config.dim_fc7:
            raise IngestionError(
                "Feature dimension {} of the {} corpus does not match dim_fc7 {}".format(
                    corpus.features.dimension, name, model.config.dim_fc7
                )
            )


def validation_loss(
    model: MultimodalVnmt, parameters: Dict[str, np.ndarray], corpus: ParallelCorpus
) -> float:
    """
    Sentence-weighted mean loss over a corpus with the latent fixed to the
    posterior mean.
    """
    total, count = 0.0, 0
    for indices in sequential_batches(corpus, model.config.batchsize):
        graph = Graph()
        nodes = {name: graph.constant(value) for name, value in parameters.items()}
        batch = make_batch(corpus, indices, model.variant.uses_images)
        terms = model.objective(graph, nodes, batch, epsilon=None)
        total += float(terms.loss.value) * batch.size
        count += batch.size
    return total / count


def train(
    config: TrainingConfig,
    train_corpus: ParallelCorpus,
    valid_corpus: ParallelCorpus,
    initial: Optional[Checkpoint] = None,
    progress: bool = False,
) -> TrainingResult:
    """
    Trains until validation stops improving or ``max_iterations`` updates were
    made.

    :param config: hyperparameters including vocabulary sizes
    :param train_corpus: encoded training pairs
    :param valid_corpus: encoded validation pairs
    :param initial: checkpoint to fine-tune from; parameters it lacks are drawn fresh
    :param progress: show a progress bar on standard error
    :return: checkpoint of the best validation loss and the training curve
    """
    model = MultimodalVnmt(config=config)
    _check_corpus(model, train_corpus, "training")
    _check_corpus(model, valid_corpus, "validation")

    rng = np.random.default_rng(config.seed)
    parameters, fine_tune = initialize_parameters(model, rng, initial)
    state = OptimizerState.zeros_like(
        parameters, config.adadelta_rho, config.adadelta_eps
    )
    stopping = EarlyStopping(patience=config.patience)
    with_images = model.variant.uses_images

    best: Optional[Checkpoint] = None
    rows = []
    running_loss, running_count = 0.0, 0
    iteration = 0
    stopped = False

    def validate():
        nonlocal best, running_loss, running_count
        loss = validation_loss(model, parameters, valid_corpus)
        train_loss = running_loss / running_count if running_count else math.nan
        rows.append((iteration, train_loss, loss))
        running_loss, running_count = 0.0, 0
        if stopping.update(iteration, loss):
            best = Checkpoint(
                variant=config.variant,
                parameters={name: value.copy() for name, value in parameters.items()},
                optimizer_state=state.copy_arrays(),
                iteration=iteration,
                rng_state=rng.bit_generator.state,
            )
        logging.info(
            "Iteration %d: train loss %.6f, validation loss %.6f, %d of %d validations "
            "without improvement",
            iteration,
            train_loss,
            loss,
            stopping.bad_validations,
            stopping.patience,
        )

    with tqdm(
        total=config.max_iterations,
        disable=not progress,
        file=sys.stderr,
        desc="training",
    ) as bar:
        while not stopped and iteration < config.max_iterations:
            for indices in batch_order(train_corpus, config.batchsize, rng):
                batch = make_batch(train_corpus, indices, with_images)
                epsilon = None
                if model.variant.has_inferrer:
                    epsilon = rng.standard_normal((batch.size, config.dimv))
                graph = Graph()
                nodes = graph.parameters_from(parameters)
                terms = model.objective(graph, nodes, batch, epsilon)
                loss = float(terms.loss.value)
                if not math.isfinite(loss):
                    raise ContractError(
                        "Training loss became {} at iteration {}".format(
                            loss, iteration + 1
                        )
                    )
                parameters = adadelta_update(
                    parameters, graph.backward(terms.loss), state, config.lr
                )
                iteration += 1
                running_loss += loss
                running_count += 1
                bar.update(1)

                if iteration % config.validate_every == 0:
                    validate()
                    if stopping.should_stop:
                        logging.info(
                            "Early stop at iteration %d, best validation loss %.6f at %d",
                            iteration,
                            stopping.best_loss,
                            stopping.best_iteration,
                        )
                        stopped = True
                        break
                if iteration >= config.max_iterations:
                    break

    if not rows or rows[-1][0] != iteration:
        validate()
    if best is None:
        raise TrainingError(
            "No finite validation loss in {} validations".format(stopping.validations)
        )

    return TrainingResult(
        checkpoint=best,
        curve=pd.DataFrame(rows, columns=CURVE_COLUMNS),
        stopped_early=stopped,
        iterations=iteration,
        fine_tune=fine_tune,
    )


def write_training_curve(curve: pd.DataFrame, path: Union[str, Path]):
    curve.to_csv(path, index=False, columns=CURVE_COLUMNS)
    logging.info("Wrote training curve with %d validations to %s", len(curve), path)

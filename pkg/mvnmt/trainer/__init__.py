from .training_config import TrainingConfig
from .adadelta import OptimizerState, adadelta_update
from .checkpoint import CHECKPOINT_FORMAT_VERSION, Checkpoint
from .model import (
    FineTuneReport,
    MultimodalVnmt,
    ObjectiveTerms,
    TrainingBatch,
    TranslationContext,
    elbo_objective,
    init_params,
    initialize_parameters,
    load_model_parameters,
)
from .early_stopping import EarlyStopping
from .batching import batch_order, make_batch
from .trainer import TrainingResult, train, validation_loss, write_training_curve
from .bound_check import elbo_by_quadrature, elbo_gap, log_marginal_by_quadrature
from .toy import toy_batch, toy_config

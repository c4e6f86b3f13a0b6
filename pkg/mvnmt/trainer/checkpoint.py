from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel

from mvnmt.model_parameters import ModelVariant
from mvnmt.trainer.adadelta import OptimizerState

CHECKPOINT_FORMAT_VERSION = 1


class Checkpoint(BaseModel):
    """
    Trained parameters with everything needed to resume training.

    :param rng_state: state of the numpy bit generator driving batching and noise
    """

    format_version: int = CHECKPOINT_FORMAT_VERSION
    variant: ModelVariant
    parameters: Dict[str, np.ndarray]
    optimizer_state: Optional[OptimizerState] = None
    iteration: int = 0
    rng_state: Optional[Dict[str, Any]] = None

    class Config:
        arbitrary_types_allowed = True

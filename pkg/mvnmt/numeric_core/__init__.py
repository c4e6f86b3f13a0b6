from .errors import (
    CheckpointFormatError,
    CheckpointIntegrityError,
    ConfigurationError,
    ContractError,
    DataFormatError,
    DimensionError,
    FeatureFileError,
    IngestionError,
    MvnmtError,
    ParameterMismatchError,
    TrainingError,
)
from .graph import Graph, Node, backward

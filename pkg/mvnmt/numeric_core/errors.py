from typing import List, Sequence


class MvnmtError(Exception):
    """Base class of all errors raised by mvnmt."""


class DimensionError(MvnmtError, ValueError):
    def __init__(self, operation: str, *shapes: Sequence[int]):
        self.operation = operation
        self.shapes = [tuple(shape) for shape in shapes]
        super().__init__(
            "Operation {} received incompatible shapes {}".format(
                operation, " and ".join(str(shape) for shape in self.shapes)
            )
        )


class ContractError(MvnmtError, ValueError):
    """A precondition of an operation is violated."""


class ConfigurationError(MvnmtError, ValueError):
    """Inconsistent model or run configuration."""


class TrainingError(MvnmtError, RuntimeError):
    """Training produced no usable model."""


class DataFormatError(MvnmtError, ValueError):
    """Input data cannot be read or is inconsistent."""


class IngestionError(DataFormatError):
    """Corpus, image ids and features do not line up."""


class FeatureFileError(DataFormatError):
    """Malformed feature file."""


class CheckpointFormatError(DataFormatError):
    """Checkpoint has a wrong magic number, version or layout."""


class CheckpointIntegrityError(DataFormatError):
    """Checkpoint payload is truncated or has a wrong length."""


class ParameterMismatchError(MvnmtError, ValueError):
    def __init__(
        self,
        missing: List[str],
        extra: List[str],
        mismatched: List[str],
    ):
        self.missing = list(missing)
        self.extra = list(extra)
        self.mismatched = list(mismatched)
        lines = []
        if self.missing:
            lines.append("missing parameters: " + ", ".join(self.missing))
        if self.extra:
            lines.append("unexpected parameters: " + ", ".join(self.extra))
        if self.mismatched:
            lines.append("parameters with wrong shape: " + ", ".join(self.mismatched))
        super().__init__("Parameter set does not match the model; " + "; ".join(lines))

"""
Run configuration read from a flat ``key = value`` text file.

Lines starting with ``#`` and blank lines are ignored. Keys are the
hyperparameters of :class:`~mvnmt.trainer.training_config.TrainingConfig` plus
the file locations of a run; unknown keys are rejected.
"""
from pathlib import Path
from typing import Dict, Optional, Union

from pydantic import ValidationError

from mvnmt.numeric_core.errors import ConfigurationError
from mvnmt.trainer.training_config import TrainingConfig

TRAINING_FILES = (
    "train_source",
    "train_target",
    "train_images",
    "train_features",
    "valid_source",
    "valid_target",
    "valid_images",
    "valid_features",
)


class RunConfig(TrainingConfig):
    train_source: Optional[Path] = None
    train_target: Optional[Path] = None
    train_images: Optional[Path] = None
    train_features: Optional[Path] = None
    valid_source: Optional[Path] = None
    valid_target: Optional[Path] = None
    valid_images: Optional[Path] = None
    valid_features: Optional[Path] = None
    source_vocab: Optional[Path] = None
    target_vocab: Optional[Path] = None
    out_dir: Path = Path(".")
    vocab_size: int = 30000

    def require(self, *keys: str):
        missing = [key for key in keys if getattr(self, key) is None]
        if missing:
            raise ConfigurationError(
                "Missing configuration keys: {}".format(", ".join(missing))
            )

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(**self.dict(include=set(TrainingConfig.__fields__)))


def parse_run_config(text: str) -> Dict[str, str]:
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, separator, value = line.partition("=")
        if not separator or not key.strip():
            raise ConfigurationError(
                "Line {} is not of the form key = value".format(number)
            )
        key = key.strip()
        if key in values:
            raise ConfigurationError("Key {} is given twice".format(key))
        values[key] = value.strip()
    return values


def build_run_config(values: Dict[str, object]) -> RunConfig:
    try:
        return RunConfig(**values)
    except ValidationError as error:
        raise ConfigurationError("Invalid configuration: {}".format(error))


def read_run_config(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, object]] = None
) -> RunConfig:
    """
    Reads a configuration file and applies command line overrides before
    validation, so variant-dependent defaults follow an overridden variant.
    Relative paths are taken relative to the configuration file.
    """
    file_values: Dict[str, str] = {}
    base = Path(".")
    if path is not None:
        try:
            file_values = parse_run_config(Path(path).read_text(encoding="utf-8"))
        except OSError as error:
            raise ConfigurationError(
                "Cannot read configuration {}: {}".format(path, error)
            )
        base = Path(path).parent
    values: Dict[str, object] = dict(file_values)
    overrides = {
        key: value for key, value in (overrides or {}).items() if value is not None
    }
    values.update(overrides)
    config = build_run_config(values)
    updates = {}
    for key in TRAINING_FILES + ("source_vocab", "target_vocab", "out_dir"):
        location = getattr(config, key)
        from_file = key in file_values and key not in overrides
        if from_file and location is not None and not location.is_absolute():
            updates[key] = base / location
    return config.copy(update=updates)

from pydantic import BaseModel, Extra, root_validator

from mvnmt.model_parameters import ModelDimensions, ModelVariant


class TrainingConfig(BaseModel):
    """
    Hyperparameters of a training run.

    ``dim_pic`` defaults to 512 for the global image variant and 256 otherwise;
    ``decay_c`` defaults to 0.001 for NMT and the global image variant and
    0.0005 otherwise.
    """

    variant: ModelVariant = ModelVariant.VNMT
    dim: int = 256
    dim_word: int = 256
    dimv: int = 256
    dim_pic: int = None
    dim_fc7: int = 4096
    source_vocab_size: int = 0
    target_vocab_size: int = 0
    batchsize: int = 32
    maxlen: int = 50
    lr: float = 1.0
    decay_c: float = None
    seed: int = 1234
    validate_every: int = 1000
    patience: int = 10
    max_iterations: int = 100000
    init_std: float = 0.1
    adadelta_rho: float = 0.95
    adadelta_eps: float = 1e-6
    clamp_log_var: float = 8.0
    gate_fix: bool = False
    latent_bypass: bool = False
    beam_size: int = 12
    normalize_length: bool = False

    class Config:
        extra = Extra.forbid
        validate_assignment = False

    @root_validator(pre=True)
    def variant_defaults(cls, values):
        variant = ModelVariant(values.get("variant", ModelVariant.VNMT))
        if values.get("dim_pic") is None:
            values["dim_pic"] = 512 if variant is ModelVariant.G else 256
        if values.get("decay_c") is None:
            values["decay_c"] = (
                0.001 if variant in (ModelVariant.NMT, ModelVariant.G) else 0.0005
            )
        return values

    @root_validator(skip_on_failure=True)
    def consistent_dimensions(cls, values):
        sizes = ("dim", "dim_word", "dimv", "dim_pic", "dim_fc7", "batchsize", "maxlen")
        for key in sizes:
            if values[key] <= 0:
                raise ValueError("{} must be positive, got {}".format(key, values[key]))
        for key in ("validate_every", "max_iterations", "beam_size"):
            if values[key] < 1:
                raise ValueError("{} must be at least 1".format(key))
        if values["dim"] % 2:
            raise ValueError("dim must be even, the encoders are bidirectional")
        if values["patience"] < 1:
            raise ValueError("patience must be at least 1")
        if not 0.0 < values["adadelta_rho"] < 1.0:
            raise ValueError("adadelta_rho must lie in (0, 1)")
        if (
            values["decay_c"] < 0.0
            or values["init_std"] <= 0.0
            or values["clamp_log_var"] <= 0.0
        ):
            raise ValueError("decay_c, init_std and clamp_log_var must not be negative")
        variant = values["variant"]
        if variant is ModelVariant.G_O_TXT and values["dim_pic"] != values["dim_word"]:
            raise ValueError(
                "Variant g-o-txt needs dim_pic equal to dim_word, got {} and {}".format(
                    values["dim_pic"], values["dim_word"]
                )
            )
        if variant is ModelVariant.G_O_RNN and values["dim_pic"] % 2:
            raise ValueError("Variant g-o-rnn needs an even dim_pic")
        return values

    def dimensions(self) -> ModelDimensions:
        return ModelDimensions(
            hidden=self.dim,
            word=self.dim_word,
            latent=self.dimv,
            image=self.dim_pic,
            image_features=self.dim_fc7,
            source_vocabulary=self.source_vocab_size,
            target_vocabulary=self.target_vocab_size,
        )

    def with_vocabularies(self, source_size: int, target_size: int) -> "TrainingConfig":
        return self.copy(
            update=dict(source_vocab_size=source_size, target_vocab_size=target_size)
        )

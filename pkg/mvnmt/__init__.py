from .model_parameters import ModelDimensions, ModelVariant, parameter_table

__version__ = "0.1.0"

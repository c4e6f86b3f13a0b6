from .image_encoder import (
    ImageParameters,
    SemanticRepresentation,
    build_semantic,
    encode_avg,
    encode_global,
    encode_image,
    encode_rnn,
    fuse_txt,
    prefix_with_image,
    project_affine,
)
from .image_features import ImageFeatureBatch, ImageFeatureSet

from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, validator

from mvnmt.numeric_core.errors import ContractError, DimensionError


class ImageFeatureSet(BaseModel):
    """
    Precomputed features of one image. Row 0 describes the whole image,
    the following rows describe detected objects.
    """

    vectors: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    @validator("vectors")
    def vectors_are_finite_rows(cls, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] < 1:
            raise ValueError("An image needs at least one feature row")
        if not np.isfinite(vectors).all():
            raise ValueError("Image features must be finite")
        return vectors

    @property
    def rows(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]


class ImageFeatureBatch(BaseModel):
    """
    Padded batch of feature sets.

    :param rows: (l_max, B, d_fc7) feature rows
    :param mask: (l_max, B) mask of real rows
    """

    rows: np.ndarray
    mask: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    @classmethod
    def from_feature_sets(
        cls, feature_sets: Sequence[ImageFeatureSet]
    ) -> "ImageFeatureBatch":
        if not feature_sets:
            raise ContractError("An image batch needs at least one feature set")
        dimension = feature_sets[0].dimension
        for features in feature_sets:
            if features.dimension != dimension:
                raise DimensionError(
                    "image batch", feature_sets[0].vectors.shape, features.vectors.shape
                )
        length = max(features.rows for features in feature_sets)
        rows = np.zeros((length, len(feature_sets), dimension))
        mask = np.zeros((length, len(feature_sets)))
        for column, features in enumerate(feature_sets):
            rows[: features.rows, column] = features.vectors
            mask[: features.rows, column] = 1.0
        return cls(rows=rows, mask=mask)

    @property
    def size(self) -> int:
        return self.rows.shape[1]

    def repeat(self, count: int) -> "ImageFeatureBatch":
        if self.size != 1:
            raise ContractError("Only a single-image batch can be repeated")
        return ImageFeatureBatch(
            rows=np.repeat(self.rows, count, axis=1),
            mask=np.repeat(self.mask, count, axis=1),
        )

    def feature_sets(self) -> List[ImageFeatureSet]:
        return [
            ImageFeatureSet(vectors=self.rows[: int(self.mask[:, column].sum()), column])
            for column in range(self.size)
        ]

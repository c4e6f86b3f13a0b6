"""
Binary image feature files.

Layout, all integers unsigned 32-bit little-endian::

    b"MVNF" | version | image count | rows per image (one per image) | dim
    payload: little-endian float32, row-major, grouped per image, row 0 global
"""
import logging
import os
import struct
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, validator

from mvnmt.image_encoder.image_features import ImageFeatureBatch, ImageFeatureSet
from mvnmt.numeric_core.errors import FeatureFileError

FEATURE_MAGIC = b"MVNF"
FEATURE_FORMAT_VERSION = 1
_UINT32 = struct.Struct("<I")


class FeatureFile(BaseModel):
    rows_per_image: List[int]
    dimension: int
    payload: np.ndarray

    class Config:
        arbitrary_types_allowed = True

    @validator("payload")
    def payload_matches_table(cls, payload, values):
        if "rows_per_image" not in values or "dimension" not in values:
            return payload
        payload = np.asarray(payload, dtype="<f4")
        expected = (sum(values["rows_per_image"]), values["dimension"])
        if payload.shape != expected:
            raise ValueError(
                "Payload of shape {} does not match {} rows of dimension {}".format(
                    payload.shape, expected[0], expected[1]
                )
            )
        return payload

    @validator("rows_per_image", each_item=True)
    def at_least_one_row(cls, rows):
        if rows < 1:
            raise ValueError("Every image needs at least one feature row")
        return rows

    @classmethod
    def from_feature_sets(cls, feature_sets: Sequence[ImageFeatureSet]) -> "FeatureFile":
        if not feature_sets:
            raise FeatureFileError("A feature file needs at least one image")
        return cls(
            rows_per_image=[features.rows for features in feature_sets],
            dimension=feature_sets[0].dimension,
            payload=np.concatenate(
                [features.vectors for features in feature_sets]
            ).astype("<f4"),
        )

    @property
    def image_count(self) -> int:
        return len(self.rows_per_image)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.rows_per_image)])

    def image(self, image_id: int) -> ImageFeatureSet:
        if not 0 <= image_id < self.image_count:
            raise IndexError(
                "Image id {} out of range for {} images".format(
                    image_id, self.image_count
                )
            )
        start, stop = self.offsets[image_id], self.offsets[image_id + 1]
        return ImageFeatureSet(vectors=self.payload[start:stop].astype(np.float64))

    def batch(self, image_ids: Sequence[int]) -> ImageFeatureBatch:
        return ImageFeatureBatch.from_feature_sets([self.image(i) for i in image_ids])

    def to_bytes(self) -> bytes:
        header = [
            FEATURE_MAGIC,
            _UINT32.pack(FEATURE_FORMAT_VERSION),
            _UINT32.pack(self.image_count),
        ]
        header += [_UINT32.pack(rows) for rows in self.rows_per_image]
        header.append(_UINT32.pack(self.dimension))
        payload = np.ascontiguousarray(self.payload, dtype="<f4")
        return b"".join(header) + payload.tobytes()


def parse_feature_file(
    content: bytes, expected_dimension: Optional[int] = None
) -> FeatureFile:
    def read_uint(offset: int) -> int:
        if offset + 4 > len(content):
            raise FeatureFileError("Feature file header is truncated")
        return _UINT32.unpack_from(content, offset)[0]

    if content[:4] != FEATURE_MAGIC:
        raise FeatureFileError(
            "Not a feature file, magic number is {!r}".format(content[:4])
        )
    version = read_uint(4)
    if version != FEATURE_FORMAT_VERSION:
        raise FeatureFileError("Unsupported feature file version {}".format(version))
    count = read_uint(8)
    rows = [read_uint(12 + 4 * i) for i in range(count)]
    dimension = read_uint(12 + 4 * count)
    start = 16 + 4 * count
    expected_bytes = sum(rows) * dimension * 4
    if len(content) - start != expected_bytes:
        raise FeatureFileError(
            "Feature payload holds {} bytes, header announces {}".format(
                len(content) - start, expected_bytes
            )
        )
    if expected_dimension is not None and dimension != expected_dimension:
        raise FeatureFileError(
            "Feature dimension {} does not match the configured {}".format(
                dimension, expected_dimension
            )
        )
    payload = np.frombuffer(content, dtype="<f4", offset=start)
    payload = payload.reshape(sum(rows), dimension)
    try:
        return FeatureFile(
            rows_per_image=rows, dimension=dimension, payload=payload.copy()
        )
    except ValueError as error:
        raise FeatureFileError(str(error))


def read_feature_file(
    path: Union[str, Path], expected_dimension: Optional[int] = None
) -> FeatureFile:
    """
    Reads and validates a feature file.

    :param path: location of the file
    :param expected_dimension: configured feature dimension, checked when given
    """
    features = parse_feature_file(Path(path).read_bytes(), expected_dimension)
    logging.debug(
        "Read %d images of dimension %d from %s",
        features.image_count,
        features.dimension,
        path,
    )
    return features


def write_feature_file(features: FeatureFile, path: Union[str, Path]):
    path = Path(path)
    temporary = path.with_name(path.name + ".tmp")
    temporary.write_bytes(features.to_bytes())
    os.replace(temporary, path)

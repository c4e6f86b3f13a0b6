"""
Binary checkpoint files.

Layout, integers little-endian::

    b"MVNC" | version u32 | storage bits u32 (64 or 32) | variant tag (u32 length, utf-8)
    parameter count u32
    per parameter: name (u32 length, utf-8) | rank u32 | dims u32 * rank | payload
    optional sections: tag (4 bytes) | body length u64 | body

Sections are ``ITER`` (iteration u64), ``OPTS`` (Adadelta accumulators) and
``RNGS`` (bit generator state as JSON). Payloads are float64 unless the storage
flag says float32; loading always yields float64.
"""
import json
import logging
import os
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from mvnmt.model_parameters import ModelVariant
from mvnmt.numeric_core.errors import CheckpointFormatError, CheckpointIntegrityError
from mvnmt.trainer.adadelta import OptimizerState
from mvnmt.trainer.checkpoint import CHECKPOINT_FORMAT_VERSION, Checkpoint

CHECKPOINT_MAGIC = b"MVNC"
STORAGE_TYPES = {64: "<f8", 32: "<f4"}
SQUARED_GRADIENTS = "squared_gradients/"
SQUARED_UPDATES = "squared_updates/"


def _string(value: str) -> bytes:
    encoded = value.encode("utf-8")
    return struct.pack("<I", len(encoded)) + encoded


def _tensors(tensors: Dict[str, np.ndarray], dtype: str) -> bytes:
    parts = [struct.pack("<I", len(tensors))]
    for name, value in tensors.items():
        parts.append(_string(name))
        parts.append(struct.pack("<I", value.ndim))
        parts.append(struct.pack("<{}I".format(value.ndim), *value.shape))
        parts.append(np.ascontiguousarray(value, dtype=dtype).tobytes())
    return b"".join(parts)


def _section(tag: bytes, body: bytes) -> bytes:
    return tag + struct.pack("<Q", len(body)) + body


def checkpoint_to_bytes(checkpoint: Checkpoint, storage: str = "float64") -> bytes:
    bits = {"float64": 64, "float32": 32}.get(storage)
    if bits is None:
        raise ValueError("Unknown storage type {}".format(storage))
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<II", checkpoint.format_version, bits),
        _string(checkpoint.variant.value),
        _tensors(checkpoint.parameters, STORAGE_TYPES[bits]),
        _section(b"ITER", struct.pack("<Q", checkpoint.iteration)),
    ]
    state = checkpoint.optimizer_state
    if state is not None:
        accumulators = {
            SQUARED_GRADIENTS + k: v for k, v in state.squared_gradients.items()
        }
        accumulators.update(
            {SQUARED_UPDATES + k: v for k, v in state.squared_updates.items()}
        )
        parts.append(
            _section(
                b"OPTS",
                struct.pack("<dd", state.rho, state.eps) + _tensors(accumulators, "<f8"),
            )
        )
    if checkpoint.rng_state is not None:
        parts.append(
            _section(
                b"RNGS", json.dumps(checkpoint.rng_state, sort_keys=True).encode("utf-8")
            )
        )
    return b"".join(parts)


class _Reader:
    def __init__(self, content: bytes, offset: int = 0, end: int = None):
        self.content = content
        self.offset = offset
        self.end = len(content) if end is None else end

    @property
    def remaining(self) -> int:
        return self.end - self.offset

    def take(self, size: int) -> bytes:
        if size > self.remaining:
            raise CheckpointIntegrityError(
                "Checkpoint is truncated: needed {} bytes at offset {}, {} left".format(
                    size, self.offset, self.remaining
                )
            )
        chunk = self.content[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, layout: str) -> Tuple:
        return struct.unpack(layout, self.take(struct.calcsize(layout)))

    def string(self) -> str:
        (length,) = self.unpack("<I")
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointFormatError("Checkpoint contains a name that is not utf-8")

    def tensors(self, dtype: str) -> Dict[str, np.ndarray]:
        (count,) = self.unpack("<I")
        tensors = {}
        item_size = np.dtype(dtype).itemsize
        for _ in range(count):
            name = self.string()
            (rank,) = self.unpack("<I")
            shape = self.unpack("<{}I".format(rank))
            payload = self.take(int(np.prod(shape, dtype=np.int64)) * item_size)
            values = np.frombuffer(payload, dtype=dtype).reshape(shape)
            tensors[name] = values.astype(np.float64)
        return tensors


def parse_checkpoint(content: bytes) -> Checkpoint:
    """
    :raises CheckpointFormatError: wrong magic number, version, storage flag or section
    :raises CheckpointIntegrityError: content is truncated or has trailing bytes
    """
    reader = _Reader(content)
    if content[:4] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(
            "Not a checkpoint, magic number is {!r}".format(content[:4])
        )
    reader.take(4)
    version, bits = reader.unpack("<II")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointFormatError("Unsupported checkpoint version {}".format(version))
    if bits not in STORAGE_TYPES:
        raise CheckpointFormatError("Unsupported storage flag {}".format(bits))
    tag = reader.string()
    try:
        variant = ModelVariant(tag)
    except ValueError:
        raise CheckpointFormatError("Unknown model variant {!r}".format(tag))
    parameters = reader.tensors(STORAGE_TYPES[bits])

    iteration, optimizer_state, rng_state = 0, None, None
    while reader.remaining:
        section = reader.take(4)
        (length,) = reader.unpack("<Q")
        body = _Reader(content, reader.offset, reader.offset + length)
        reader.take(length)
        if section == b"ITER":
            (iteration,) = body.unpack("<Q")
        elif section == b"OPTS":
            rho, eps = body.unpack("<dd")
            accumulators = body.tensors("<f8")
            optimizer_state = OptimizerState(
                squared_gradients={
                    k[len(SQUARED_GRADIENTS) :]: v
                    for k, v in accumulators.items()
                    if k.startswith(SQUARED_GRADIENTS)
                },
                squared_updates={
                    k[len(SQUARED_UPDATES) :]: v
                    for k, v in accumulators.items()
                    if k.startswith(SQUARED_UPDATES)
                },
                rho=rho,
                eps=eps,
            )
        elif section == b"RNGS":
            try:
                rng_state = json.loads(body.take(length).decode("utf-8"))
            except ValueError:
                raise CheckpointFormatError("Random generator section is not valid JSON")
        else:
            raise CheckpointFormatError("Unknown checkpoint section {!r}".format(section))
        if body.remaining:
            raise CheckpointIntegrityError(
                "Section {!r} has {} unread bytes".format(section, body.remaining)
            )
    return Checkpoint(
        format_version=version,
        variant=variant,
        parameters=parameters,
        optimizer_state=optimizer_state,
        iteration=iteration,
        rng_state=rng_state,
    )


def save_checkpoint(
    checkpoint: Checkpoint, path: Union[str, Path], storage: str = "float64"
):
    """
    Writes a checkpoint to a temporary file and renames it over ``path``.

    :param storage: ``float64`` for bit-exact round trips or ``float32``
    """
    path = Path(path)
    temporary = path.with_name(path.name + ".tmp")
    temporary.write_bytes(checkpoint_to_bytes(checkpoint, storage))
    os.replace(temporary, path)
    logging.info(
        "Wrote %s checkpoint with %d parameters at iteration %d to %s",
        checkpoint.variant.value,
        len(checkpoint.parameters),
        checkpoint.iteration,
        path,
    )


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    try:
        content = Path(path).read_bytes()
    except OSError as error:
        raise CheckpointFormatError("Cannot read checkpoint {}: {}".format(path, error))
    return parse_checkpoint(content)
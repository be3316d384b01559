"""Binary model files.

Layout (little-endian): magic ``MFSM``, u16 version, u8 activation code,
u8 fidelity-label flag, f64 best validation loss, u32 epochs run, u32 flag
text length followed by the newline-joined flags in UTF-8, u8 parameter
precision (0 float32, 1 float64), u8 field-layer count, u8 scalar-layer
count, then every array as u8 ndim, u32 shape entries and a row-major payload:
field layers (weight, bias) and scalar layers in the parameter precision,
then the four normalization stats (mean, std each) and the two input ranges
in float64.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError
from ..models import Activation
from ..utils import get_logger
from .network import DenseLayer
from .trainer import NormalizationStats, TrainedModel

logger = get_logger(__name__)

MAGIC = b"MFSM"
VERSION = 2

_ACTIVATION_CODES = {Activation.GELU: 0, Activation.RELU: 1}
_ACTIVATIONS = {code: act for act, code in _ACTIVATION_CODES.items()}
_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}
_DTYPES = {code: dt for dt, code in _DTYPE_CODES.items()}


def _pack_array(arr: np.ndarray, dtype: np.dtype = np.dtype("float64")) -> bytes:
    arr = np.ascontiguousarray(arr, dtype=dtype.newbyteorder("<"))
    head = struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes(order="C")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def unpack(self, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise ModelFormatError("model file is truncated")
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def raw(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise ModelFormatError("model file is truncated")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def array(self, dtype: np.dtype = np.dtype("float64")) -> np.ndarray:
        (ndim,) = self.unpack("<B")
        shape = self.unpack(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        payload = self.raw(dtype.itemsize * count)
        return np.frombuffer(payload, dtype=dtype.newbyteorder("<")).reshape(shape).astype(dtype)


def _stats_arrays(model: TrainedModel) -> list[np.ndarray]:
    arrays = []
    for stats in (model.field_inputs, model.field_output, model.scalar_inputs, model.scalar_output):
        arrays += [stats.mean, stats.std]
    arrays += list(model.field_input_range) + list(model.scalar_input_range)
    return arrays


def model_to_bytes(model: TrainedModel) -> bytes:
    dtype = model.field_net[0].weight.dtype
    if dtype not in _DTYPE_CODES:
        raise ModelFormatError(f"unsupported parameter precision {dtype}")
    flags = "\n".join(model.flags).encode("utf-8")
    parts = [
        struct.pack("<4sH", MAGIC, VERSION),
        struct.pack(
            "<BBdI",
            _ACTIVATION_CODES[model.activation],
            1 if model.fidelity_label else 0,
            model.best_val_loss,
            model.epochs_run,
        ),
        struct.pack("<I", len(flags)),
        flags,
        struct.pack("<B", _DTYPE_CODES[dtype]),
        struct.pack("<BB", len(model.field_net), len(model.scalar_net)),
    ]
    for layer in model.field_net + model.scalar_net:
        parts += [_pack_array(layer.weight, dtype), _pack_array(layer.bias, dtype)]
    parts += [_pack_array(arr) for arr in _stats_arrays(model)]
    return b"".join(parts)


def model_from_bytes(data: bytes) -> TrainedModel:
    reader = _Reader(data)
    magic, version = reader.unpack("<4sH")
    if magic != MAGIC:
        raise ModelFormatError(f"not a model file (magic {magic!r})")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model file version {version}")

    act_code, label, best_val, epochs = reader.unpack("<BBdI")
    if act_code not in _ACTIVATIONS:
        raise ModelFormatError(f"unknown activation code {act_code}")
    (flag_len,) = reader.unpack("<I")
    flag_text = reader.raw(flag_len).decode("utf-8")
    (dtype_code,) = reader.unpack("<B")
    if dtype_code not in _DTYPES:
        raise ModelFormatError(f"unknown parameter precision code {dtype_code}")
    dtype = _DTYPES[dtype_code]
    n_field, n_scalar = reader.unpack("<BB")

    layers = [
        DenseLayer(reader.array(dtype), reader.array(dtype))
        for _ in range(n_field + n_scalar)
    ]
    stats = [NormalizationStats(reader.array(), reader.array()) for _ in range(4)]
    ranges = [reader.array() for _ in range(4)]
    if reader.offset != len(data):
        raise ModelFormatError(f"{len(data) - reader.offset} trailing bytes in model file")

    return TrainedModel(
        field_net=layers[:n_field],
        scalar_net=layers[n_field:],
        activation=_ACTIVATIONS[act_code],
        fidelity_label=bool(label),
        field_inputs=stats[0],
        field_output=stats[1],
        scalar_inputs=stats[2],
        scalar_output=stats[3],
        field_input_range=(ranges[0], ranges[1]),
        scalar_input_range=(ranges[2], ranges[3]),
        best_val_loss=best_val,
        epochs_run=epochs,
        flags=flag_text.split("\n") if flag_text else [],
    )


def save_model(model: TrainedModel, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))
    logger.info(f"Saved model: {path}")
    return path


def load_model(path: Path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"model file not found: {path}")
    return model_from_bytes(path.read_bytes())

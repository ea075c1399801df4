"""Checkpoint persistence.

File layout (bit-exact contract):
  line   "ARCMATCH-CKPT v1"
  lines  canonical sorted key=value config
  blank line
  per parameter tensor, in named_params order: an ASCII header line with
  the element count, then that many raw little-endian float32 values
  finally an 8-byte little-endian FNV-1a 64 checksum of the whole
  parameter section (headers and raw values).

Values are stored in 32-bit precision; in-memory compute stays 64-bit, so
a first round-trip may move scores by ~1e-7 relative, after which further
round-trips are bitwise stable.
"""

import numpy as np

from .errors import (CheckpointChecksumError, CheckpointShapeError,
                     CheckpointVersionError)
from .models import build_model_from_kv, model_config_kv

MAGIC = "ARCMATCH-CKPT v1"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def save_checkpoint(path: str, model) -> None:
    kv = model_config_kv(model)
    blob = bytearray()
    for _, tensor in model.named_params():
        flat = tensor.astype("<f4").ravel()
        blob += f"{flat.size}\n".encode("ascii")
        blob += flat.tobytes()
    with open(path, "wb") as fh:
        fh.write((MAGIC + "\n").encode("utf-8"))
        for key in sorted(kv):
            fh.write(f"{key}={kv[key]}\n".encode("utf-8"))
        fh.write(b"\n")
        fh.write(bytes(blob))
        fh.write(fnv1a64(bytes(blob)).to_bytes(8, "little"))


def _read_line(buf: bytes, pos: int):
    end = buf.find(b"\n", pos)
    if end < 0:
        raise CheckpointShapeError("unexpected end of file inside header")
    return buf[pos:end].decode("utf-8"), end + 1


def load_checkpoint(path: str):
    """Rebuild the model stored at path; returns (model, config_kv)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    line, pos = _read_line(buf, 0)
    if line != MAGIC:
        raise CheckpointVersionError(
            f"bad magic {line!r}; this reader handles {MAGIC!r}"
        )
    kv = {}
    while True:
        line, pos = _read_line(buf, pos)
        if line == "":
            break
        key, _, value = line.partition("=")
        kv[key] = value
    if len(buf) < pos + 8:
        raise CheckpointChecksumError("file truncated before checksum")
    blob, stored = buf[pos:-8], buf[-8:]
    if fnv1a64(blob) != int.from_bytes(stored, "little"):
        raise CheckpointChecksumError("parameter blob checksum mismatch")

    model = build_model_from_kv(kv)
    cursor = 0
    for name, tensor in model.named_params():
        end = blob.find(b"\n", cursor)
        if end < 0:
            raise CheckpointShapeError(f"missing length header for {name}")
        try:
            count = int(blob[cursor:end])
        except ValueError:
            raise CheckpointShapeError(f"bad length header for {name}")
        if count != tensor.size:
            raise CheckpointShapeError(
                f"{name}: stored {count} values, config implies {tensor.size}"
            )
        start = end + 1
        stop = start + 4 * count
        if stop > len(blob):
            raise CheckpointShapeError(f"{name}: parameter data truncated")
        vals = np.frombuffer(blob[start:stop], dtype="<f4").astype(np.float64)
        tensor[...] = vals.reshape(tensor.shape)
        cursor = stop
    if cursor != len(blob):
        raise CheckpointShapeError(
            f"{len(blob) - cursor} trailing bytes after the last tensor"
        )
    return model, kv

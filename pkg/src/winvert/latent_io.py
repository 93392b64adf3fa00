"""Portable latent file format (WLAT).

Layout: magic ``WLAT`` (4 bytes), version u8 = 1, dtype u8 (0=f32, 1=f16),
n_codes u16 LE, dim u16 LE, reserved u16 = 0, then n_codes*dim values
row-major little-endian, then CRC32 (IEEE) of header+payload as u32 LE.
"""

from __future__ import annotations

import io
import struct
import zlib
from typing import BinaryIO

import numpy as np

from .errors import CorruptionError, LatentFormatError, TruncatedStreamError, ValidationError
from .types import LatentCode

MAGIC = b"WLAT"
VERSION = 1
HEADER_FMT = "<4sBBHHH"
HEADER_SIZE = struct.calcsize(HEADER_FMT)  # 12
CRC_SIZE = 4

_DTYPE_TAGS = {"f32": 0, "f16": 1}
_TAG_DTYPES = {0: "f32", 1: "f16"}
_NP_DTYPES = {"f32": "<f4", "f16": "<f2"}


def latent_byte_size(n_codes: int, dim: int, dtype: str = "f32") -> int:
    """Total WLAT size in bytes for a code of the given shape."""
    if dtype not in _NP_DTYPES:
        raise ValidationError(f"unknown dtype {dtype!r}")
    item = 4 if dtype == "f32" else 2
    return HEADER_SIZE + n_codes * dim * item + CRC_SIZE


def latent_to_bytes(code: LatentCode, dtype: str | None = None) -> bytes:
    """Serialize a LatentCode to WLAT bytes.

    ``dtype`` overrides the code's own storage tag; f16 quantizes the payload.
    """
    dtype = dtype or code.dtype
    if dtype not in _DTYPE_TAGS:
        raise ValidationError(f"unknown dtype {dtype!r}")
    if code.n_codes > 0xFFFF or code.dim > 0xFFFF:
        raise ValidationError("n_codes and dim must fit in 16 bits")
    header = struct.pack(
        HEADER_FMT, MAGIC, VERSION, _DTYPE_TAGS[dtype], code.n_codes, code.dim, 0
    )
    with np.errstate(over="ignore"):
        payload = np.asarray(code.codes).astype(_NP_DTYPES[dtype]).tobytes(order="C")
    if dtype == "f16":
        quantized = np.frombuffer(payload, dtype="<f2")
        if not np.isfinite(quantized).all():
            raise ValidationError("latent values overflow f16 storage")
    crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    return header + payload + struct.pack("<I", crc)


def write_latent(code: LatentCode, destination: BinaryIO | str, dtype: str | None = None) -> int:
    """Write a LatentCode to a binary sink or path; returns the byte count."""
    data = latent_to_bytes(code, dtype=dtype)
    if isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__"):
        with open(destination, "wb") as f:
            f.write(data)
    else:
        destination.write(data)
    return len(data)


def latent_from_bytes(data: bytes) -> LatentCode:
    """Parse WLAT bytes back into a LatentCode, validating the checksum."""
    return read_latent(io.BytesIO(data))


def read_latent(source: BinaryIO | str) -> LatentCode:
    """Read a LatentCode from a binary source or path."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "rb") as f:
            return _read_stream(f)
    return _read_stream(source)


def _read_exact(stream: BinaryIO, n: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise TruncatedStreamError(f"stream ended while reading {what} ({len(data)}/{n} bytes)")
    return data


def _read_stream(stream: BinaryIO) -> LatentCode:
    header = _read_exact(stream, HEADER_SIZE, "header")
    magic, version, dtype_tag, n_codes, dim, reserved = struct.unpack(HEADER_FMT, header)
    if magic != MAGIC:
        raise LatentFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise LatentFormatError(f"unsupported version {version}")
    if dtype_tag not in _TAG_DTYPES:
        raise LatentFormatError(f"unknown dtype tag {dtype_tag}")
    if reserved != 0:
        raise LatentFormatError(f"reserved field must be 0, got {reserved}")
    if n_codes < 1 or dim < 1:
        raise LatentFormatError(f"invalid shape ({n_codes}, {dim})")
    dtype = _TAG_DTYPES[dtype_tag]
    item = 4 if dtype == "f32" else 2
    payload = _read_exact(stream, n_codes * dim * item, "payload")
    (stored_crc,) = struct.unpack("<I", _read_exact(stream, CRC_SIZE, "checksum"))
    actual_crc = zlib.crc32(header + payload) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise CorruptionError(
            f"CRC32 mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
        )
    values = np.frombuffer(payload, dtype=_NP_DTYPES[dtype]).astype(np.float32)
    if not np.isfinite(values).all():
        raise CorruptionError("decoded payload contains non-finite values")
    return LatentCode(values.reshape(n_codes, dim), dtype=dtype)

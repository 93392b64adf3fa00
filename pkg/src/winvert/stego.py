"""Secure latent hiding: a steganographic codec carrying serialized latents.

The secret latent is serialized (f16 by default to halve the payload) and
framed as magic ``SDH1``, payload length u32 LE, then the latent bytes
whose trailing CRC32 protects the body. The default codec embeds frame
bits into the least significant bit of 8-bit channel values at positions
drawn from a key-seeded pseudorandom permutation, so recovery is bit-exact
with the right key and rejected by the integrity checks otherwise. Other
embedding schemes (e.g. adaptive-distortion codecs) can be swapped in
through the ``StegoCodec`` interface. LSB embedding is deliberately
fragile: any lossy re-encode destroys the payload.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import CapacityError, CorruptionError, LatentFormatError, ValidationError
from .images import from_uint8, to_uint8
from .latent_io import latent_byte_size, latent_from_bytes, latent_to_bytes
from .types import ImageTensor, LatentCode

MAGIC = b"SDH1"
FRAME_HEADER_SIZE = 8  # magic + u32 length


@dataclass(frozen=True)
class StegoPayload:
    """Parsed frame: its magic, body length, the body's CRC32 and the body."""

    magic: bytes
    payload_length: int
    crc32: int
    body: bytes

    @staticmethod
    def for_latent(secret: LatentCode, dtype: str = "f16") -> "StegoPayload":
        body = latent_to_bytes(secret, dtype=dtype)
        (crc,) = struct.unpack("<I", body[-4:])
        return StegoPayload(MAGIC, len(body), crc, body)

    def to_bytes(self) -> bytes:
        return self.magic + struct.pack("<I", self.payload_length) + self.body


def payload_bits(n_codes: int, dim: int, dtype: str = "f16") -> int:
    """Total embedded bits for a latent of the given shape."""
    return 8 * (FRAME_HEADER_SIZE + latent_byte_size(n_codes, dim, dtype))


def capacity_bits(carrier: ImageTensor) -> int:
    """One bit per 8-bit channel value."""
    return 3 * carrier.height * carrier.width


class StegoCodec(Protocol):
    """Bit-level embedding scheme; the framing above is codec-agnostic."""

    def embed(self, carrier: ImageTensor, bits: np.ndarray, key: int) -> ImageTensor: ...

    def extract(self, stego: ImageTensor, n_bits: int, key: int) -> np.ndarray: ...


def _key_positions(key: int, n_channels: int) -> np.ndarray:
    if not isinstance(key, (int, np.integer)) or key < 0:
        raise ValidationError(f"key must be a nonnegative integer, got {key!r}")
    return np.random.default_rng(np.random.PCG64(int(key))).permutation(n_channels)


class KeyedLsbCodec:
    """LSB substitution at key-permuted channel positions; one-step changes."""

    def embed(self, carrier: ImageTensor, bits: np.ndarray, key: int) -> ImageTensor:
        flat = to_uint8(carrier).reshape(-1)
        if bits.size > flat.size:
            raise CapacityError(required_bits=int(bits.size), available_bits=int(flat.size))
        pos = _key_positions(key, flat.size)[: bits.size]
        flat = flat.copy()
        flat[pos] = (flat[pos] & 0xFE) | bits
        return from_uint8(flat.reshape(carrier.height, carrier.width, 3))

    def extract(self, stego: ImageTensor, n_bits: int, key: int) -> np.ndarray:
        flat = to_uint8(stego).reshape(-1)
        if n_bits > flat.size:
            raise CorruptionError(f"requested {n_bits} bits exceed image capacity")
        pos = _key_positions(key, flat.size)
        return flat[pos[:n_bits]] & 1


DEFAULT_CODEC = KeyedLsbCodec()


def hide(
    secret: LatentCode,
    carrier: ImageTensor,
    key: int,
    dtype: str = "f16",
    codec: StegoCodec = DEFAULT_CODEC,
) -> ImageTensor:
    """Embed a latent in the carrier; the stego image is 8-bit clean.

    With the default codec each channel value changes by at most one 8-bit
    quantization step.
    """
    payload = StegoPayload.for_latent(secret, dtype=dtype)
    bits = np.unpackbits(np.frombuffer(payload.to_bytes(), dtype=np.uint8))
    return codec.embed(carrier, bits, key)


def reveal(stego: ImageTensor, key: int, codec: StegoCodec = DEFAULT_CODEC) -> LatentCode:
    """Extract and validate the hidden latent; raises on any integrity failure."""
    header_bits = codec.extract(stego, FRAME_HEADER_SIZE * 8, key)
    header = np.packbits(header_bits).tobytes()
    if header[:4] != MAGIC:
        raise LatentFormatError(
            "no stego payload frame found (bad magic; wrong key or unmodified carrier)"
        )
    (length,) = struct.unpack("<I", header[4:8])
    max_body = (capacity_bits(stego) - FRAME_HEADER_SIZE * 8) // 8
    if length == 0 or length > max_body:
        raise CorruptionError(f"declared payload length {length} exceeds capacity")
    all_bits = codec.extract(stego, (FRAME_HEADER_SIZE + length) * 8, key)
    body = np.packbits(all_bits[FRAME_HEADER_SIZE * 8 :]).tobytes()
    # latent decoding validates the WLAT header and its CRC32
    return latent_from_bytes(body)

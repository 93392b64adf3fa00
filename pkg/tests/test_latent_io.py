import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winvert.errors import (
    CorruptionError,
    LatentFormatError,
    TruncatedStreamError,
    ValidationError,
)
from winvert.latent_io import (
    HEADER_SIZE,
    latent_byte_size,
    latent_from_bytes,
    latent_to_bytes,
    read_latent,
    write_latent,
)
from winvert.types import LatentCode


def _latent(rng, n=18, d=512):
    return LatentCode(rng.standard_normal((n, d)).astype(np.float32))


def test_default_latent_size_matches_header_arithmetic():
    # 12-byte header + payload + 4-byte CRC32 trailer
    rng = np.random.default_rng(0)
    data = latent_to_bytes(_latent(rng))
    assert len(data) == HEADER_SIZE + 18 * 512 * 4 + 4 == 36_880
    assert latent_byte_size(18, 512, "f32") == 36_880
    assert latent_byte_size(18, 512, "f16") == HEADER_SIZE + 18 * 512 * 2 + 4 == 18_448


def test_zero_one_by_one_payload_is_all_zero_bits():
    code = LatentCode(np.zeros((1, 1), dtype=np.float32))
    data = latent_to_bytes(code)
    payload = data[HEADER_SIZE:-4]
    assert payload == b"\x00\x00\x00\x00"


def test_round_trip_100_random_codes_bit_identical():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        d = int(rng.integers(1, 64))
        code = _latent(rng, n, d)
        back = latent_from_bytes(latent_to_bytes(code))
        assert back == code


def test_f16_round_trip_after_quantization():
    rng = np.random.default_rng(2)
    code = _latent(rng, 4, 8)
    back = latent_from_bytes(latent_to_bytes(code, dtype="f16"))
    assert back.dtype == "f16"
    quantized = np.asarray(code.codes).astype("<f2").astype(np.float32)
    assert np.array_equal(np.asarray(back.codes), quantized)
    # a second trip is exact
    again = latent_from_bytes(latent_to_bytes(back))
    assert np.array_equal(np.asarray(again.codes), np.asarray(back.codes))


def test_write_read_file_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    code = _latent(rng, 6, 16)
    path = tmp_path / "a.wlat"
    n = write_latent(code, path)
    assert n == path.stat().st_size == latent_byte_size(6, 16)
    assert read_latent(path) == code


def test_single_bit_payload_flips_all_detected():
    rng = np.random.default_rng(4)
    code = _latent(rng, 2, 16)
    data = bytearray(latent_to_bytes(code))
    payload_bits = (len(data) - HEADER_SIZE - 4) * 8
    flips = rng.integers(0, payload_bits, size=1000)
    for bit in flips:
        corrupted = bytearray(data)
        byte_i = HEADER_SIZE + int(bit) // 8
        corrupted[byte_i] ^= 1 << (int(bit) % 8)
        with pytest.raises(CorruptionError):
            latent_from_bytes(bytes(corrupted))


def test_bad_magic_is_format_error():
    rng = np.random.default_rng(5)
    data = bytearray(latent_to_bytes(_latent(rng, 1, 4)))
    data[:4] = b"XXXX"
    with pytest.raises(LatentFormatError):
        latent_from_bytes(bytes(data))


def test_bad_version_is_format_error():
    rng = np.random.default_rng(6)
    data = bytearray(latent_to_bytes(_latent(rng, 1, 4)))
    data[4] = 9
    with pytest.raises(LatentFormatError):
        latent_from_bytes(bytes(data))


def test_truncated_stream_is_io_error():
    rng = np.random.default_rng(7)
    data = latent_to_bytes(_latent(rng, 2, 8))
    with pytest.raises(TruncatedStreamError):
        read_latent(io.BytesIO(data[: len(data) // 2]))


def test_non_finite_values_rejected_at_construction():
    bad = np.zeros((2, 4), dtype=np.float32)
    bad[0, 0] = np.nan
    with pytest.raises(ValidationError):
        LatentCode(bad)


def test_f16_overflow_rejected():
    code = LatentCode(np.full((1, 4), 1e38, dtype=np.float32))
    with pytest.raises(ValidationError):
        latent_to_bytes(code, dtype="f16")


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(1, 6),
    d=st.integers(1, 32),
    seed=st.integers(0, 2**31 - 1),
)
def test_property_roundtrip_identity_f32(n, d, seed):
    rng = np.random.default_rng(seed)
    code = _latent(rng, n, d)
    assert latent_from_bytes(latent_to_bytes(code)) == code

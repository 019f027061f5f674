"""SHA-256, HMAC-SHA256 and the session key/nonce derivations.

HMAC is built by hand on top of ``hashlib.sha256`` so the key-block rule
and the pad constants are visible; ``hmac`` from the stdlib is only used
by the tests as an independent reference.
"""

from __future__ import annotations

import hashlib
import hmac as _stdlib_hmac

from .errors import MalformedChipInfo

BLOCK_SIZE = 64
DIGEST_SIZE = 32
NONCE_SIZE = 32
MAX_KEY_SIZE = 256
CHIP_INFO_HASHED_BYTES = 16

_OPAD = 0x5C
_IPAD = 0x36
_OPAD_TABLE = bytes(b ^ _OPAD for b in range(256))
_IPAD_TABLE = bytes(b ^ _IPAD for b in range(256))


class SecretKey(bytes):
    """Symmetric key bytes that refuse to show themselves in reprs or logs."""

    def __new__(cls, value: bytes) -> "SecretKey":
        value = bytes(value)
        if not 1 <= len(value) <= MAX_KEY_SIZE:
            raise ValueError(
                f"key must be 1..{MAX_KEY_SIZE} bytes, got {len(value)}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"SecretKey(<redacted {len(self)} bytes>)"

    __str__ = __repr__

    def hex(self, *args, **kwargs) -> str:  # type: ignore[override]
        raise TypeError("refusing to hex-encode a SecretKey; use reveal()")

    def reveal(self) -> bytes:
        """Plain bytes copy, for the ROM container writer only."""
        return bytes(self)


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def xor_bytes(*chunks: bytes) -> bytes:
    """Byte-wise XOR of equal-length byte strings."""
    size = len(chunks[0])
    if any(len(c) != size for c in chunks):
        raise ValueError("xor operands must have equal length")
    acc = int.from_bytes(chunks[0], "big")
    for c in chunks[1:]:
        acc ^= int.from_bytes(c, "big")
    return acc.to_bytes(size, "big")


def derive_k_prime(key: bytes) -> bytes:
    """Block-sized key: hashed if longer than a block, then zero-padded."""
    if not key:
        raise ValueError("key must be non-empty")
    if len(key) > BLOCK_SIZE:
        key = sha256(key)
    return bytes(key).ljust(BLOCK_SIZE, b"\x00")


def hmac_sha256(key: bytes, message: bytes) -> bytes:
    k_prime = derive_k_prime(key)
    inner = hashlib.sha256(k_prime.translate(_IPAD_TABLE))
    inner.update(message)
    outer = hashlib.sha256(k_prime.translate(_OPAD_TABLE))
    outer.update(inner.digest())
    return outer.digest()


def digests_equal(a: bytes, b: bytes) -> bool:
    return _stdlib_hmac.compare_digest(a, b)


def generate_n2(key: bytes, chip_info_bytes: bytes, n1: bytes) -> bytes:
    """Prover nonce without a TRNG.

    ``T = sha256(chip_info[:16]) XOR n1`` and ``n2 = HMAC(K, T)``. The
    first 16 chip-info bytes are the device UUID.
    """
    if len(chip_info_bytes) < CHIP_INFO_HASHED_BYTES:
        raise MalformedChipInfo(
            f"chip info has {len(chip_info_bytes)} bytes, "
            f"need at least {CHIP_INFO_HASHED_BYTES}")
    _check_len("n1", n1, NONCE_SIZE)
    t = xor_bytes(sha256(chip_info_bytes[:CHIP_INFO_HASHED_BYTES]), n1)
    return hmac_sha256(key, t)


def derive_k1(mac_k_n1: bytes, n1: bytes, n2: bytes) -> SecretKey:
    """Session key ``HMAC(K, n1) XOR n1 XOR n2``."""
    _check_len("mac", mac_k_n1, DIGEST_SIZE)
    _check_len("n1", n1, NONCE_SIZE)
    _check_len("n2", n2, NONCE_SIZE)
    return SecretKey(xor_bytes(mac_k_n1, n1, n2))


def _check_len(name: str, value: bytes, size: int) -> None:
    if len(value) != size:
        raise ValueError(f"{name} must be {size} bytes, got {len(value)}")

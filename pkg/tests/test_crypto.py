import hashlib
import hmac
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from frameboot.crypto import (SecretKey, derive_k1, derive_k_prime,
                              generate_n2, hmac_sha256, sha256, xor_bytes)
from frameboot.errors import MalformedChipInfo

# RFC 4231 test cases 1-6 (case 5 is published truncated to 128 bits).
RFC4231 = [
    (b"\x0b" * 20, b"Hi There",
     "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"),
    (b"Jefe", b"what do ya want for nothing?",
     "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"),
    (b"\xaa" * 20, b"\xdd" * 50,
     "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"),
    (bytes(range(1, 26)), b"\xcd" * 50,
     "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b"),
    (b"\x0c" * 20, b"Test With Truncation",
     "a3b6167473100ee06e0c796c2955552b"),
    (b"\xaa" * 131, b"Test Using Larger Than Block-Size Key - Hash Key First",
     "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"),
]


def reference_hmac(key, msg):
    return hmac.new(key, msg, hashlib.sha256).digest()


def test_sha256_published_vectors():
    assert sha256(b"").hex() == \
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert sha256(b"abc").hex() == \
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert sha256(b"abc") == sha256(b"abc")


@pytest.mark.parametrize("key,msg,expected", RFC4231)
def test_hmac_rfc4231(key, msg, expected):
    out = hmac_sha256(key, msg)
    assert out.hex()[:len(expected)] == expected
    assert out == reference_hmac(key, msg)


def test_rfc4231_table_agrees_with_stdlib():
    # guards the frozen table itself against transcription errors
    for key, msg, expected in RFC4231:
        assert reference_hmac(key, msg).hex().startswith(expected)


def test_derive_k_prime_cases():
    block = b"\xaa" * 64
    assert derive_k_prime(block) == block
    assert derive_k_prime(b"12345678") == b"12345678" + bytes(56)
    long_key = bytes(range(100))
    assert derive_k_prime(long_key) == hashlib.sha256(long_key).digest() + bytes(32)
    # the long-key rule is what RFC 2104 HMAC does internally
    assert hmac_sha256(long_key, b"m") == reference_hmac(long_key, b"m")


def test_derive_k_prime_rejects_empty():
    with pytest.raises(ValueError):
        derive_k_prime(b"")


@given(st.binary(min_size=1, max_size=200), st.binary(max_size=300))
def test_hmac_matches_stdlib(key, msg):
    assert hmac_sha256(key, msg) == reference_hmac(key, msg)


def test_generate_n2_zero_nonce_is_plain_hash():
    k, ci = b"Jefe", bytes(range(36))
    expected = reference_hmac(k, hashlib.sha256(ci[:16]).digest())
    assert generate_n2(k, ci, bytes(32)) == expected


def test_generate_n2_composed_oracle():
    k, ci, n1 = b"Jefe", bytes(16), b"\x01" * 32
    t = bytes(a ^ b for a, b in zip(hashlib.sha256(bytes(16)).digest(), n1))
    assert generate_n2(k, ci, n1) == reference_hmac(k, t)


def test_generate_n2_only_reads_first_16_bytes():
    k, n1 = b"key", b"\x05" * 32
    assert generate_n2(k, bytes(16) + b"A" * 20, n1) == \
        generate_n2(k, bytes(16) + b"B" * 20, n1)


def test_generate_n2_short_chip_info():
    with pytest.raises(MalformedChipInfo):
        generate_n2(b"k", bytes(15), bytes(32))


def test_generate_n2_no_collisions_over_random_nonces():
    rng = random.Random(2024)
    k, ci = b"device-key", bytes(range(36))
    seen = {generate_n2(k, ci, rng.randbytes(32)) for _ in range(10_000)}
    assert len(seen) == 10_000


@given(st.binary(min_size=32, max_size=32), st.binary(min_size=32, max_size=32))
def test_distinct_n1_give_distinct_t(a, b):
    h = hashlib.sha256(bytes(16)).digest()
    if a != b:
        assert xor_bytes(h, a) != xor_bytes(h, b)


def test_derive_k1_cases():
    mac = b"\xff" * 32
    assert derive_k1(mac, b"\x0f" * 32, bytes(32)) == b"\xf0" * 32
    n = bytes(range(32))
    assert derive_k1(mac, n, n) == mac


@given(st.binary(min_size=32, max_size=32), st.binary(min_size=32, max_size=32),
       st.binary(min_size=32, max_size=32))
def test_derive_k1_against_byte_loop(m, n1, n2):
    expected = bytearray(32)
    for i in range(32):
        expected[i] = m[i] ^ n1[i] ^ n2[i]
    assert derive_k1(m, n1, n2) == bytes(expected)
    assert derive_k1(m, n1, n1) == m


def test_derive_k1_rejects_wrong_sizes():
    with pytest.raises(ValueError):
        derive_k1(bytes(32), bytes(31), bytes(32))


def test_secret_key_is_redacted():
    k = SecretKey(b"\x42" * 32)
    assert "42" not in repr(k) and "42" not in str(k)
    with pytest.raises(TypeError):
        k.hex()
    assert k.reveal() == b"\x42" * 32


@pytest.mark.parametrize("size", [0, 257])
def test_secret_key_length_bounds(size):
    with pytest.raises(ValueError):
        SecretKey(bytes(size))

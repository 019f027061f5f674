import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frameboot.errors import (BadVersion, EmptyImage, NonzeroReserved,
                              PayloadTooLong, WrongLength)
from frameboot.frame import (FRAME_SIZE, HEADER_SIZE, PAYLOAD_SIZE, Frame,
                             deserialize_frame, deserialize_frames,
                             frame_digest, make_frame, pack_image,
                             serialize_frame, serialize_frames, unpack_image,
                             verify_frame)

KEY = b"frame-test-key-0123456789abcdef!"


def test_sizes():
    assert (FRAME_SIZE, HEADER_SIZE, PAYLOAD_SIZE) == (1024, 56, 968)


def test_5734_byte_image_is_six_frames():
    frames = pack_image(bytes(5734), KEY)
    assert len(frames) == 6
    assert [f.header.payload_len for f in frames] == [968] * 5 + [894]
    assert all(len(serialize_frame(f)) == 1024 for f in frames)


@pytest.mark.parametrize("size,count", [(1, 1), (968, 1), (969, 2),
                                        (1936, 2), (1937, 3)])
def test_frame_count_boundaries(size, count):
    assert len(pack_image(bytes(size), KEY)) == count


def test_header_layout_is_bit_exact():
    f = make_frame(3, b"abc", KEY)
    raw = serialize_frame(f)
    digest, num, off, plen, ver, res = struct.unpack_from("<32sIIHH12s", raw)
    assert (num, off, plen, ver, res) == (3, 3 * 968, 3, 1, bytes(12))
    assert raw[HEADER_SIZE:HEADER_SIZE + 3] == b"abc"
    assert raw[HEADER_SIZE + 3:] == bytes(965)
    # independent oracle: hmac of the frame with its digest zeroed
    import hashlib
    import hmac
    assert digest == hmac.new(KEY, bytes(32) + raw[32:],
                              hashlib.sha256).digest()
    assert digest == frame_digest(f, KEY)


def test_empty_image_rejected():
    with pytest.raises(EmptyImage):
        pack_image(b"", KEY)


def test_make_frame_rejects_oversized_payload():
    with pytest.raises(PayloadTooLong):
        make_frame(0, bytes(969), KEY)


@settings(max_examples=50)
@given(st.binary(min_size=1, max_size=5000))
def test_pack_unpack_roundtrip(img):
    frames = pack_image(img, KEY)
    assert unpack_image(frames) == img
    assert all(verify_frame(f, KEY, i) for i, f in enumerate(frames))
    assert deserialize_frames(serialize_frames(frames)) == frames


def test_verify_rejects_wrong_position_and_key():
    f = make_frame(2, b"x", KEY)
    assert verify_frame(f, KEY, 2)
    assert not verify_frame(f, KEY, 1)
    assert not verify_frame(f, b"other key", 2)


def test_every_single_bit_flip_is_rejected():
    raw = serialize_frame(make_frame(1, bytes(range(256)) * 3, KEY))
    for bit in range(FRAME_SIZE * 8):
        mutated = bytearray(raw)
        mutated[bit // 8] ^= 1 << (bit % 8)
        try:
            frame = deserialize_frame(bytes(mutated))
        except (BadVersion, NonzeroReserved, PayloadTooLong):
            continue
        assert not verify_frame(frame, KEY, 1), bit


@settings(max_examples=300)
@given(st.integers(0, FRAME_SIZE - 1), st.integers(1, 255))
def test_single_byte_mutation_is_rejected(pos, delta):
    raw = bytearray(serialize_frame(make_frame(4, b"payload" * 50, KEY)))
    raw[pos] ^= delta
    try:
        frame = deserialize_frame(bytes(raw))
    except (BadVersion, NonzeroReserved, PayloadTooLong):
        return
    assert not verify_frame(frame, KEY, 4)


def test_deserialize_errors():
    good = serialize_frame(make_frame(0, b"a", KEY))
    with pytest.raises(WrongLength):
        deserialize_frame(good[:-1])
    bad_version = bytearray(good)
    bad_version[42] = 2
    with pytest.raises(BadVersion):
        deserialize_frame(bytes(bad_version))
    bad_reserved = bytearray(good)
    bad_reserved[50] = 1
    with pytest.raises(NonzeroReserved):
        deserialize_frame(bytes(bad_reserved))
    too_long = bytearray(good)
    too_long[40:42] = (969).to_bytes(2, "little")
    with pytest.raises(PayloadTooLong):
        deserialize_frame(bytes(too_long))
    with pytest.raises(WrongLength):
        deserialize_frames(good + b"x")


def test_serialize_rejects_short_payload():
    f = make_frame(0, b"a", KEY)
    with pytest.raises(WrongLength):
        serialize_frame(Frame(f.header, b"short"))

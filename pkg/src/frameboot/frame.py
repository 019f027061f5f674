"""1 KB integrity-protected firmware frames.

Serialized layout, little-endian::

    offset  size  field
    0       32    digest          HMAC-SHA256 over the frame with this field zeroed
    32      4     frame_number
    36      4     flash_offset    frame_number * 968, byte address in the image
    40      2     payload_len     valid payload bytes (<= 968)
    42      2     header_version  1
    44      12    reserved        zero
    56      968   payload         zero-padded past payload_len
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

from .crypto import DIGEST_SIZE, digests_equal, hmac_sha256
from .errors import (BadVersion, EmptyImage, NonzeroReserved, PayloadTooLong,
                     WrongLength)

FRAME_SIZE = 1024
HEADER_SIZE = 56
PAYLOAD_SIZE = FRAME_SIZE - HEADER_SIZE
HEADER_VERSION = 1
RESERVED_SIZE = 12

_HEADER = struct.Struct("<32sIIHH12s")
assert _HEADER.size == HEADER_SIZE

_ZERO_DIGEST = bytes(DIGEST_SIZE)
_ZERO_RESERVED = bytes(RESERVED_SIZE)


@dataclass(frozen=True)
class FrameHeader:
    digest: bytes
    frame_number: int
    flash_offset: int
    payload_len: int
    header_version: int = HEADER_VERSION
    reserved: bytes = field(default=_ZERO_RESERVED)

    def pack(self) -> bytes:
        return _HEADER.pack(self.digest, self.frame_number, self.flash_offset,
                            self.payload_len, self.header_version,
                            self.reserved)


@dataclass(frozen=True)
class Frame:
    header: FrameHeader
    payload: bytes

    @property
    def frame_number(self) -> int:
        return self.header.frame_number

    @property
    def data(self) -> bytes:
        """Payload truncated to its valid length."""
        return self.payload[:self.header.payload_len]


def serialize_frame(frame: Frame) -> bytes:
    if len(frame.payload) != PAYLOAD_SIZE:
        raise WrongLength(
            f"payload must be {PAYLOAD_SIZE} bytes, got {len(frame.payload)}")
    return frame.header.pack() + frame.payload


def deserialize_frame(raw: bytes) -> Frame:
    if len(raw) != FRAME_SIZE:
        raise WrongLength(f"frame must be {FRAME_SIZE} bytes, got {len(raw)}")
    digest, number, offset, payload_len, version, reserved = \
        _HEADER.unpack_from(raw)
    if version != HEADER_VERSION:
        raise BadVersion(f"unsupported header version {version}")
    if reserved != _ZERO_RESERVED:
        raise NonzeroReserved("reserved header bytes must be zero")
    if payload_len > PAYLOAD_SIZE:
        raise PayloadTooLong(f"payload_len {payload_len} > {PAYLOAD_SIZE}")
    header = FrameHeader(digest, number, offset, payload_len, version,
                         reserved)
    return Frame(header, bytes(raw[HEADER_SIZE:]))


def frame_digest(frame: Frame, key: bytes) -> bytes:
    """Keyed digest of the whole serialized frame, digest field zeroed."""
    unsigned = replace(frame, header=replace(frame.header,
                                             digest=_ZERO_DIGEST))
    return hmac_sha256(key, serialize_frame(unsigned))


def make_frame(number: int, data: bytes, key: bytes) -> Frame:
    if len(data) > PAYLOAD_SIZE:
        raise PayloadTooLong(f"{len(data)} bytes do not fit in one frame")
    header = FrameHeader(_ZERO_DIGEST, number, number * PAYLOAD_SIZE,
                         len(data))
    frame = Frame(header, data.ljust(PAYLOAD_SIZE, b"\x00"))
    digest = frame_digest(frame, key)
    return replace(frame, header=replace(header, digest=digest))


def pack_image(image: bytes, key: bytes) -> list[Frame]:
    """Split an image into signed frames of 968 payload bytes each."""
    if not image:
        raise EmptyImage("cannot pack an empty image")
    return [make_frame(i, image[off:off + PAYLOAD_SIZE], key)
            for i, off in enumerate(range(0, len(image), PAYLOAD_SIZE))]


def unpack_image(frames: list[Frame]) -> bytes:
    return b"".join(f.data for f in frames)


def verify_frame(frame: Frame, key: bytes, expected_number: int) -> bool:
    """Per-frame verdict: position checks plus a constant-time digest match."""
    h = frame.header
    if h.frame_number != expected_number:
        return False
    if h.flash_offset != h.frame_number * PAYLOAD_SIZE:
        return False
    if len(frame.payload) != PAYLOAD_SIZE:
        return False
    return digests_equal(frame_digest(frame, key), h.digest)


def serialize_frames(frames: list[Frame]) -> bytes:
    """Frame stream: concatenated 1024-byte frames, no container header."""
    return b"".join(serialize_frame(f) for f in frames)


def deserialize_frames(stream: bytes) -> list[Frame]:
    if len(stream) % FRAME_SIZE:
        raise WrongLength(
            f"frame stream length {len(stream)} is not a multiple of "
            f"{FRAME_SIZE}")
    return [deserialize_frame(stream[off:off + FRAME_SIZE])
            for off in range(0, len(stream), FRAME_SIZE)]

"""Protocol messages and their byte codec.

Every message on the wire is ``[type u8][len u16 LE][body]``:

====  =============  ===============================================
type  message        body
====  =============  ===============================================
1     Challenge      n1 (32)
2     ProverAuth     mac (32) || n2 (32)
3     VerifierAuth   b (32)
4     AuthResult     c (u8, 0 or 1)
5     Command        f (u8, 0 or 1) [|| s_addr u32 LE || l u32 LE]
6     Report         status (u8) || r (32)
7     Close          empty
====  =============  ===============================================
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Union

from .attestation import AttestParams
from .crypto import DIGEST_SIZE, NONCE_SIZE
from .errors import InvalidField, LengthMismatch, TruncatedBody, UnknownType

HEADER = struct.Struct("<BH")
HEADER_SIZE = HEADER.size
MAX_BODY = 0xFFFF


class MessageType(IntEnum):
    CHALLENGE = 1
    PROVER_AUTH = 2
    VERIFIER_AUTH = 3
    AUTH_RESULT = 4
    COMMAND = 5
    REPORT = 6
    CLOSE = 7


class ReportStatus(IntEnum):
    OK = 0
    INTEGRITY_FAILURE = 1
    OUT_OF_BOUNDS = 2
    DEVICE_ERROR = 3


def _need(name: str, value: bytes, size: int) -> None:
    if len(value) != size:
        raise ValueError(f"{name} must be {size} bytes, got {len(value)}")


@dataclass(frozen=True)
class Challenge:
    n1: bytes

    def __post_init__(self):
        _need("n1", self.n1, NONCE_SIZE)


@dataclass(frozen=True)
class ProverAuth:
    """A = HMAC(K, n1) with n2 appended."""

    mac: bytes
    n2: bytes

    def __post_init__(self):
        _need("mac", self.mac, DIGEST_SIZE)
        _need("n2", self.n2, NONCE_SIZE)


@dataclass(frozen=True)
class VerifierAuth:
    b: bytes

    def __post_init__(self):
        _need("b", self.b, DIGEST_SIZE)


@dataclass(frozen=True)
class AuthResult:
    c: bool


@dataclass(frozen=True)
class Command:
    """``f`` set: secure boot. ``f`` clear: attest the range in ``d``."""

    f: bool
    d: AttestParams | None = None


@dataclass(frozen=True)
class Report:
    r: bytes
    status: ReportStatus = ReportStatus.OK

    def __post_init__(self):
        _need("r", self.r, DIGEST_SIZE)
        object.__setattr__(self, "status", ReportStatus(self.status))


@dataclass(frozen=True)
class Close:
    pass


Message = Union[Challenge, ProverAuth, VerifierAuth, AuthResult, Command,
                Report, Close]

_TYPE_OF = {
    Challenge: MessageType.CHALLENGE,
    ProverAuth: MessageType.PROVER_AUTH,
    VerifierAuth: MessageType.VERIFIER_AUTH,
    AuthResult: MessageType.AUTH_RESULT,
    Command: MessageType.COMMAND,
    Report: MessageType.REPORT,
    Close: MessageType.CLOSE,
}


def message_type(msg: Message) -> MessageType:
    return _TYPE_OF[type(msg)]


def _body(msg: Message) -> bytes:
    if isinstance(msg, Challenge):
        return msg.n1
    if isinstance(msg, ProverAuth):
        return msg.mac + msg.n2
    if isinstance(msg, VerifierAuth):
        return msg.b
    if isinstance(msg, AuthResult):
        return bytes([int(msg.c)])
    if isinstance(msg, Command):
        body = bytes([int(msg.f)])
        if msg.d is not None:
            body += struct.pack("<II", msg.d.s_addr, msg.d.l)
        return body
    if isinstance(msg, Report):
        return bytes([msg.status]) + msg.r
    if isinstance(msg, Close):
        return b""
    raise TypeError(f"not a protocol message: {msg!r}")


def encode_message(msg: Message) -> bytes:
    body = _body(msg)
    return HEADER.pack(message_type(msg), len(body)) + body


def _flag(value: int, name: str) -> bool:
    if value not in (0, 1):
        raise InvalidField(f"{name} must be 0 or 1, got {value}")
    return bool(value)


def _parse(kind: MessageType, body: bytes) -> Message:
    size = len(body)

    def expect(*sizes: int) -> None:
        if size not in sizes:
            raise LengthMismatch(
                f"{kind.name} body must be {' or '.join(map(str, sizes))} "
                f"bytes, got {size}")

    if kind is MessageType.CHALLENGE:
        expect(NONCE_SIZE)
        return Challenge(body)
    if kind is MessageType.PROVER_AUTH:
        expect(DIGEST_SIZE + NONCE_SIZE)
        return ProverAuth(body[:DIGEST_SIZE], body[DIGEST_SIZE:])
    if kind is MessageType.VERIFIER_AUTH:
        expect(DIGEST_SIZE)
        return VerifierAuth(body)
    if kind is MessageType.AUTH_RESULT:
        expect(1)
        return AuthResult(_flag(body[0], "c"))
    if kind is MessageType.COMMAND:
        expect(1, 9)
        f = _flag(body[0], "f")
        if size == 1:
            return Command(f)
        s_addr, length = struct.unpack("<II", body[1:])
        if length == 0:
            raise InvalidField("attestation length must be > 0")
        return Command(f, AttestParams(s_addr, length))
    if kind is MessageType.REPORT:
        expect(1 + DIGEST_SIZE)
        try:
            status = ReportStatus(body[0])
        except ValueError:
            raise InvalidField(f"unknown report status {body[0]}") from None
        return Report(body[1:], status)
    expect(0)
    return Close()


def split_message(buf: bytes) -> tuple[Message, bytes]:
    """Decode the first message of ``buf``; return it and the remainder."""
    if len(buf) < HEADER_SIZE:
        raise TruncatedBody(f"need {HEADER_SIZE} header bytes, got {len(buf)}")
    code, length = HEADER.unpack_from(buf)
    try:
        kind = MessageType(code)
    except ValueError:
        raise UnknownType(f"unknown message type {code}") from None
    end = HEADER_SIZE + length
    if len(buf) < end:
        raise TruncatedBody(
            f"declared body of {length} bytes, only {len(buf) - HEADER_SIZE} "
            f"present")
    return _parse(kind, bytes(buf[HEADER_SIZE:end])), bytes(buf[end:])


def decode_message(data: bytes) -> Message:
    msg, rest = split_message(data)
    if rest:
        raise LengthMismatch(f"{len(rest)} trailing bytes after message")
    return msg

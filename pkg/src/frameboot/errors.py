"""Exception hierarchy shared by every frameboot module."""

from __future__ import annotations


class FramebootError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FramebootError):
    """Bad scenario configuration or command-line input."""


# crypto

class MalformedChipInfo(FramebootError, ValueError):
    """Chip info region is shorter than the 16 bytes hashed for n2."""


# device

class DeviceError(FramebootError):
    pass


class OutOfBounds(DeviceError):
    pass


class RegionLocked(DeviceError):
    """A write or erase touched a PMP write-locked region."""


class NoSuchFrame(DeviceError, IndexError):
    pass


class MalformedFlash(DeviceError):
    """Flash cannot hold the number of frames the ROM expects."""


class RomFormatError(DeviceError, ValueError):
    pass


# frames

class FrameFormatError(FramebootError, ValueError):
    pass


class WrongLength(FrameFormatError):
    pass


class BadVersion(FrameFormatError):
    pass


class NonzeroReserved(FrameFormatError):
    pass


class PayloadTooLong(FrameFormatError):
    pass


class EmptyImage(FrameFormatError):
    pass


# protocol

class ProtocolError(FramebootError):
    pass


class InvalidState(ProtocolError):
    """Operation called in a session step that does not allow it."""


class MissingAttestParams(ProtocolError):
    pass


class CodecError(ProtocolError, ValueError):
    pass


class UnknownType(CodecError):
    pass


class LengthMismatch(CodecError):
    pass


class TruncatedBody(CodecError):
    pass


class InvalidField(CodecError):
    pass

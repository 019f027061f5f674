"""Remote attestation of a verifier-chosen flash range."""

from __future__ import annotations

from dataclasses import dataclass

from .crypto import hmac_sha256
from .device import DeviceState


@dataclass(frozen=True)
class AttestParams:
    s_addr: int
    l: int  # noqa: E741

    def __post_init__(self):
        if not 0 <= self.s_addr <= 0xFFFFFFFF:
            raise ValueError("s_addr must fit in 32 bits")
        if not 0 < self.l <= 0xFFFFFFFF:
            raise ValueError("l must be in 1..2**32-1")


def attest(dev: DeviceState, session_key: bytes, params: AttestParams) -> bytes:
    """HMAC of ``flash[s_addr:s_addr+l]`` under the session key.

    Raises ``OutOfBounds`` for a range outside flash; never mutates.
    """
    region = dev.flash_read(params.s_addr, params.l)
    return hmac_sha256(session_key, region)


def expected_report(session_key: bytes, reference_flash: bytes,
                    params: AttestParams) -> bytes:
    """Verifier-side value for an untampered device with ``reference_flash``."""
    return hmac_sha256(session_key,
                       reference_flash[params.s_addr:params.s_addr + params.l])

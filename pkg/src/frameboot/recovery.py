"""Resilience engine: reflash one frame from the golden ROM copy, then lock it."""

from __future__ import annotations

from dataclasses import dataclass

from .device import DeviceState
from .errors import FrameFormatError, RegionLocked
from .frame import FRAME_SIZE, deserialize_frame, serialize_frame, verify_frame


@dataclass(frozen=True)
class RecoveryOutcome:
    reflashed: bool
    locked: bool


def frame_region(index: int) -> tuple[int, int]:
    return index * FRAME_SIZE, FRAME_SIZE


def recover(dev: DeviceState, frame_index: int, key: bytes) -> RecoveryOutcome:
    """Erase, rewrite from ROM, check, then write-lock the frame's region.

    Runs start to finish with no other device operation in between. The
    corrupted flash bytes are never read; the only data source is ROM.
    Raises ``RegionLocked`` if the region was already recovered this power
    cycle.
    """
    golden = dev.rom_golden_frame(frame_index)
    start, length = frame_region(frame_index)
    if dev.is_locked(start, length):
        raise RegionLocked(f"frame {frame_index} region is already locked")

    dev.flash_erase_region(start, length)
    dev.flash_write(start, serialize_frame(golden))
    try:
        written = deserialize_frame(dev.flash_read(start, length))
        reflashed = verify_frame(written, key, frame_index)
    except FrameFormatError:
        reflashed = False

    dev.pmp_lock(start, length)
    return RecoveryOutcome(reflashed=reflashed,
                           locked=dev.is_locked(start, length))

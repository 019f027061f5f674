"""Simulated prover hardware: flash, secure ROM and PMP write locks."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .crypto import SecretKey
from .errors import (MalformedFlash, NoSuchFrame, OutOfBounds, RegionLocked,
                     RomFormatError)
from .frame import (FRAME_SIZE, Frame, deserialize_frame, pack_image,
                    serialize_frame, verify_frame)

DEFAULT_FLASH_CAPACITY = 64 * 1024
ERASED_BYTE = 0xFF

ROM_MAGIC = b"SRRM"
ROM_VERSION = 1
CHIP_INFO_SIZE = 36

_CHIP_INFO = struct.Struct("<16s4s8s4s4s")
assert _CHIP_INFO.size == CHIP_INFO_SIZE


@dataclass(frozen=True)
class ChipInfo:
    uuid: bytes = bytes(16)
    vendor_id: bytes = bytes(4)
    serial: bytes = bytes(8)
    firmware_version: bytes = bytes(4)
    board_version: bytes = bytes(4)

    def __post_init__(self):
        for name, size in (("uuid", 16), ("vendor_id", 4), ("serial", 8),
                           ("firmware_version", 4), ("board_version", 4)):
            if len(getattr(self, name)) != size:
                raise ValueError(f"{name} must be {size} bytes")

    def to_bytes(self) -> bytes:
        return _CHIP_INFO.pack(self.uuid, self.vendor_id, self.serial,
                               self.firmware_version, self.board_version)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ChipInfo":
        if len(raw) != CHIP_INFO_SIZE:
            raise ValueError(f"chip info must be {CHIP_INFO_SIZE} bytes")
        return cls(*_CHIP_INFO.unpack(raw))


@dataclass(frozen=True)
class SecureRom:
    """Read-only storage: chip info, the shared key and the golden frames.

    Golden frames are checked against the key on construction, so a ROM
    that exists is a ROM that verifies.
    """

    chip_info: ChipInfo
    key: SecretKey
    golden_frames: tuple[Frame, ...]

    def __post_init__(self):
        object.__setattr__(self, "key", SecretKey(self.key))
        object.__setattr__(self, "golden_frames", tuple(self.golden_frames))
        for i, frame in enumerate(self.golden_frames):
            if not verify_frame(frame, self.key, i):
                raise RomFormatError(f"golden frame {i} does not verify")

    @property
    def frame_count(self) -> int:
        return len(self.golden_frames)

    def golden_image(self) -> bytes:
        """Serialized golden frames, i.e. the expected flash prefix."""
        return self._golden_image

    @cached_property
    def _golden_image(self) -> bytes:
        return b"".join(serialize_frame(f) for f in self.golden_frames)

    def to_bytes(self) -> bytes:
        key = self.key.reveal()
        return b"".join([
            ROM_MAGIC,
            struct.pack("<H", ROM_VERSION),
            self.chip_info.to_bytes(),
            struct.pack("<H", len(key)),
            key,
            struct.pack("<I", self.frame_count),
            self.golden_image(),
        ])

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SecureRom":
        view = memoryview(raw)
        pos = 0

        def take(n: int) -> bytes:
            nonlocal pos
            if pos + n > len(view):
                raise RomFormatError("ROM image is truncated")
            chunk = bytes(view[pos:pos + n])
            pos += n
            return chunk

        if take(4) != ROM_MAGIC:
            raise RomFormatError("bad ROM magic")
        (version,) = struct.unpack("<H", take(2))
        if version != ROM_VERSION:
            raise RomFormatError(f"unsupported ROM version {version}")
        chip_info = ChipInfo.from_bytes(take(CHIP_INFO_SIZE))
        (key_len,) = struct.unpack("<H", take(2))
        if key_len == 0:
            raise RomFormatError("ROM key is empty")
        key = take(key_len)
        (count,) = struct.unpack("<I", take(4))
        frames = [deserialize_frame(take(FRAME_SIZE)) for _ in range(count)]
        if pos != len(view):
            raise RomFormatError("trailing bytes after ROM frames")
        return cls(chip_info, SecretKey(key), tuple(frames))


class FlashMemory:
    """Byte-addressable NOR flash with no access control of its own."""

    def __init__(self, capacity: int = DEFAULT_FLASH_CAPACITY,
                 data: bytes | None = None):
        self.capacity = capacity
        self.bytes = bytearray([ERASED_BYTE]) * capacity
        if data is not None:
            if len(data) > capacity:
                raise OutOfBounds("initial flash contents exceed capacity")
            self.bytes[:len(data)] = data

    def check_range(self, addr: int, length: int) -> None:
        if addr < 0 or length < 0 or addr + length > self.capacity:
            raise OutOfBounds(
                f"[{addr}, {addr + length}) outside flash of "
                f"{self.capacity} bytes")

    def snapshot(self) -> bytes:
        return bytes(self.bytes)


@dataclass(frozen=True)
class PmpRegion:
    start: int
    length: int
    write_locked: bool = True

    @property
    def end(self) -> int:
        return self.start + self.length

    def overlaps(self, start: int, length: int) -> bool:
        return start < self.end and self.start < start + length


class PmpLockSet:
    """Write locks that can only grow until the next power cycle."""

    def __init__(self, regions: Iterable[PmpRegion] = ()):
        self.regions: list[PmpRegion] = []
        for r in regions:
            self.lock(r.start, r.length)

    def lock(self, start: int, length: int) -> None:
        if length == 0:
            return
        lo, hi = start, start + length
        keep = []
        for r in self.regions:
            # merge anything overlapping or touching the new range
            if r.start <= hi and lo <= r.end:
                lo, hi = min(lo, r.start), max(hi, r.end)
            else:
                keep.append(r)
        keep.append(PmpRegion(lo, hi - lo))
        self.regions = sorted(keep, key=lambda r: r.start)

    def is_locked(self, start: int, length: int) -> bool:
        if length == 0:
            return False
        return any(r.write_locked and r.overlaps(start, length)
                   for r in self.regions)


@dataclass
class DeviceState:
    """One prover: ROM, flash, PMP table and a simulated cycle counter.

    Every flash, PMP and ROM access is appended to ``access_log`` as a tuple
    ``(operation, *args)`` so tests can check who touched what, and when.
    """

    rom: SecureRom
    flash: FlashMemory = field(default_factory=FlashMemory)
    pmp: PmpLockSet = field(default_factory=PmpLockSet)
    cycle_counter: int = 0
    access_log: list[tuple] = field(default_factory=list, repr=False)

    @classmethod
    def provision(cls, rom: SecureRom,
                  capacity: int = DEFAULT_FLASH_CAPACITY) -> "DeviceState":
        """Device whose flash holds the golden image at address 0."""
        image = rom.golden_image()
        if len(image) > capacity:
            raise MalformedFlash(
                f"{rom.frame_count} frames do not fit in {capacity} bytes")
        return cls(rom, FlashMemory(capacity, image))

    def power_cycle(self) -> "DeviceState":
        """Same ROM and flash contents, PMP locks and cycle counter reset."""
        return DeviceState(self.rom,
                           FlashMemory(self.flash.capacity,
                                       self.flash.snapshot()))

    def flash_read(self, addr: int, length: int) -> bytes:
        self.flash.check_range(addr, length)
        self.access_log.append(("flash_read", addr, length))
        return bytes(self.flash.bytes[addr:addr + length])

    def flash_write(self, addr: int, data: bytes) -> None:
        self.flash.check_range(addr, len(data))
        self._check_unlocked(addr, len(data))
        self.access_log.append(("flash_write", addr, len(data)))
        self.flash.bytes[addr:addr + len(data)] = data

    def flash_erase_region(self, start: int, length: int) -> None:
        self.flash.check_range(start, length)
        self._check_unlocked(start, length)
        self.access_log.append(("flash_erase", start, length))
        self.flash.bytes[start:start + length] = \
            bytes([ERASED_BYTE]) * length

    def pmp_lock(self, start: int, length: int) -> None:
        self.flash.check_range(start, length)
        self.access_log.append(("pmp_lock", start, length))
        self.pmp.lock(start, length)

    def is_locked(self, start: int, length: int) -> bool:
        return self.pmp.is_locked(start, length)

    def rom_chip_info_bytes(self) -> bytes:
        self.access_log.append(("rom_chip_info",))
        return self.rom.chip_info.to_bytes()

    def rom_golden_frame(self, index: int) -> Frame:
        if not 0 <= index < self.rom.frame_count:
            raise NoSuchFrame(
                f"no golden frame {index}; ROM holds {self.rom.frame_count}")
        self.access_log.append(("rom_golden_frame", index))
        return self.rom.golden_frames[index]

    def add_cycles(self, cycles: int) -> None:
        if cycles < 0:
            raise ValueError("cycle counter cannot go backwards")
        self.cycle_counter += cycles

    def _check_unlocked(self, start: int, length: int) -> None:
        if self.pmp.is_locked(start, length):
            raise RegionLocked(
                f"[{start}, {start + length}) overlaps a write-locked region")


def build_rom(image: bytes, key: bytes,
              chip_info: ChipInfo | None = None) -> SecureRom:
    key = SecretKey(key)
    return SecureRom(chip_info or ChipInfo(), key, tuple(pack_image(image, key)))

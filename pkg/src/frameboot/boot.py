"""Frame-by-frame secure bootstrap with a boolean chain of trust."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .device import DeviceState
from .errors import FrameFormatError, MalformedFlash, RegionLocked
from .frame import FRAME_SIZE, deserialize_frame, verify_frame
from .recovery import recover
from .timing import PAPER_COSTS, CycleCosts


@dataclass(frozen=True)
class FrameVerdict:
    index: int
    passed: bool
    recovered: bool = False

    @property
    def final(self) -> bool:
        return self.passed or self.recovered


@dataclass
class BootResult:
    integrity: bool
    verdicts: list[FrameVerdict]
    cycles: int
    recovered_count: int
    events: list[tuple[str, int]] = field(default_factory=list, repr=False)

    @property
    def halted_at(self) -> int | None:
        if self.integrity:
            return None
        return self.verdicts[-1].index


def chain_of_trust(verdicts: Iterable[bool]) -> bool:
    """I_0 is the ROM anchor (true); I_{i+1} = I_i and V_i."""
    integrity = True
    for v in verdicts:
        integrity = integrity and bool(v)
    return integrity


def _check_frame(dev: DeviceState, key: bytes, index: int) -> bool:
    raw = dev.flash_read(index * FRAME_SIZE, FRAME_SIZE)
    try:
        frame = deserialize_frame(raw)
    except FrameFormatError:
        return False
    return verify_frame(frame, key, index)


def _reflash_first_frame(dev: DeviceState) -> None:
    start = 0
    if dev.is_locked(start, FRAME_SIZE):
        return
    verified = dev.flash_read(start, FRAME_SIZE)
    dev.flash_erase_region(start, FRAME_SIZE)
    dev.flash_write(start, verified)


def bootstrap(dev: DeviceState, key: bytes,
              costs: CycleCosts = PAPER_COSTS,
              resilience_enabled: bool = True) -> BootResult:
    """Verify every flash frame in order, recovering failures if enabled.

    Frame ``i + 1`` is never read before frame ``i`` has a final verdict.
    Without resilience, boot stops at the first failing frame. An
    undeserializable frame is a failed verdict like any other.

    Cycles charged: ``first_frame_with`` for frame 0, ``per_frame_with`` for
    each later frame examined, ``per_recovery`` per recovered frame.
    """
    n = dev.rom.frame_count
    if n * FRAME_SIZE > dev.flash.capacity:
        raise MalformedFlash(
            f"flash of {dev.flash.capacity} bytes cannot hold {n} frames")

    verdicts: list[FrameVerdict] = []
    events: list[tuple[str, int]] = []
    cycles = 0
    integrity = True
    for i in range(n):
        events.append(("examine", i))
        cycles += costs.first_frame_with if i == 0 else costs.per_frame_with
        passed = _check_frame(dev, key, i)
        if i == 0 and passed:
            _reflash_first_frame(dev)

        recovered = False
        if not passed and resilience_enabled:
            events.append(("recover", i))
            try:
                outcome = recover(dev, i, key)
            except RegionLocked:
                outcome = None
            recovered = (outcome is not None and outcome.reflashed
                         and _check_frame(dev, key, i))
            if recovered:
                cycles += costs.per_recovery

        verdict = FrameVerdict(i, passed, recovered)
        verdicts.append(verdict)
        events.append(("verdict", i))
        integrity = integrity and verdict.final
        if not integrity:
            break

    dev.add_cycles(cycles)
    return BootResult(
        integrity=chain_of_trust(v.final for v in verdicts),
        verdicts=verdicts,
        cycles=cycles,
        recovered_count=sum(v.recovered for v in verdicts),
        events=events,
    )


def format_verdicts(result: BootResult) -> list[str]:
    """Machine-readable ``frame,<i>,<pass|fail>,<recovered|->`` lines."""
    return [f"frame,{v.index},{'pass' if v.passed else 'fail'},"
            f"{'recovered' if v.recovered else '-'}"
            for v in result.verdicts]

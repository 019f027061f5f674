"""Executable adversary and end-to-end scenario grading.

The adversary controls flash (through the normal write path, so PMP locks
stop it) and the channel (through interceptors). It has no way to reach
ROM: no API for that exists.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .attestation import AttestParams
from .channel import Channel, Direction, run_session
from .crypto import SecretKey, sha256
from .device import ChipInfo, DeviceState, build_rom
from .errors import ConfigError, RegionLocked
from .frame import FRAME_SIZE
from .protocol import DEFAULT_MESSAGE_BUDGET, ProverSession, VerifierSession
from .timing import PAPER_COSTS, PRESETS, CycleCosts

DEFAULT_FLOOD_COUNT = 64
MAX_OVERWRITE = 64

# Index of each message in an honest session transcript.
MSG_CHALLENGE, MSG_PROVER_AUTH, MSG_VERIFIER_AUTH = 0, 1, 2
MSG_AUTH_RESULT, MSG_COMMAND, MSG_REPORT = 3, 4, 5


class AttackKind(Enum):
    NONE = "none"
    FLASH_BIT_FLIP = "flash_bit_flip"
    FLASH_OVERWRITE = "flash_overwrite"
    FRAME_REORDER = "frame_reorder"
    CHANNEL_TAMPER = "channel_tamper"
    CHANNEL_REPLAY = "channel_replay"
    CHANNEL_FLOOD = "channel_flood"
    WRONG_KEY = "wrong_key"

    @property
    def on_flash(self) -> bool:
        return self in (AttackKind.FLASH_BIT_FLIP, AttackKind.FLASH_OVERWRITE,
                        AttackKind.FRAME_REORDER)

    @property
    def on_channel(self) -> bool:
        return self in (AttackKind.CHANNEL_TAMPER, AttackKind.CHANNEL_REPLAY,
                        AttackKind.CHANNEL_FLOOD)


@dataclass(frozen=True)
class AttackSpec:
    """What to attack. ``bit`` counts from the start of a frame's 1024-byte
    region, LSB first within each byte (0..8191); ``message_index`` counts
    messages in session order (0 = Challenge)."""

    kind: AttackKind = AttackKind.NONE
    frame: int | None = None
    bit: int | None = None
    address: int | None = None
    length: int | None = None
    other_frame: int | None = None
    message_index: int | None = None
    count: int | None = None
    seed: int = 0

    @property
    def target(self) -> str:
        k = self.kind
        if k is AttackKind.FLASH_BIT_FLIP:
            return f"frame{self.frame}:bit{self.bit}"
        if k is AttackKind.FLASH_OVERWRITE:
            where = (f"addr{self.address}" if self.address is not None
                     else f"frame{self.frame}")
            return f"{where}:len{self.length}"
        if k is AttackKind.FRAME_REORDER:
            return f"frame{self.frame}<->frame{self.partner_frame}"
        if k.on_channel:
            return f"msg{self.message_target}"
        return "-"

    @property
    def partner_frame(self) -> int:
        return self.other_frame if self.other_frame is not None \
            else self.frame + 1

    @property
    def message_target(self) -> int:
        if self.message_index is not None:
            return self.message_index
        return MSG_CHALLENGE if self.kind is AttackKind.CHANNEL_FLOOD \
            else MSG_PROVER_AUTH

    def validate(self) -> None:
        k = self.kind
        if k in (AttackKind.FLASH_BIT_FLIP, AttackKind.FRAME_REORDER) \
                and self.frame is None:
            raise ConfigError(f"{k.value} needs a frame")
        if k is AttackKind.FLASH_OVERWRITE and self.frame is None \
                and self.address is None:
            raise ConfigError("flash_overwrite needs a frame or an address")
        if self.bit is not None and not 0 <= self.bit < FRAME_SIZE * 8:
            raise ConfigError(f"bit must be in 0..{FRAME_SIZE * 8 - 1}")
        if self.length is not None and not 1 <= self.length <= MAX_OVERWRITE:
            raise ConfigError(f"length must be in 1..{MAX_OVERWRITE}")
        if k is AttackKind.FRAME_REORDER and self.partner_frame == self.frame:
            raise ConfigError("frame_reorder needs two distinct frames")


@dataclass
class ScenarioConfig:
    image: bytes
    key: bytes
    chip_info: ChipInfo = field(default_factory=ChipInfo)
    seed: int = 0
    flag_f: bool = True
    attest: AttestParams | None = None
    resilience: bool = True
    costs: CycleCosts = PAPER_COSTS
    locked_frames: tuple[int, ...] = ()
    budget: int = DEFAULT_MESSAGE_BUDGET


@dataclass(frozen=True)
class ScenarioReport:
    attack: AttackSpec
    detected: bool
    recovered: bool
    session_closed: bool
    final_integrity: bool
    blocked: bool = False
    command_delivered: bool = False

    def __post_init__(self):
        if self.recovered and not self.detected:
            raise AssertionError("recovered implies detected")

    def csv_line(self) -> str:
        cells = [self.attack.kind.value, self.attack.target,
                 str(self.attack.seed)]
        cells += [str(int(getattr(self, name))) for name in CSV_COLUMNS[3:]]
        return ",".join(cells)


CSV_COLUMNS = ("attack", "target", "seed", "detected", "recovered",
               "session_closed", "final_integrity", "blocked",
               "command_delivered")
CSV_HEADER = ",".join(CSV_COLUMNS)


def make_image(size: int, seed: int = 0) -> bytes:
    """Seeded pseudo-random firmware image."""
    return random.Random(seed).randbytes(size)


def default_key(seed: int) -> SecretKey:
    return SecretKey(sha256(b"frameboot-device-key" + seed.to_bytes(8, "little")))


def default_chip_info(seed: int) -> ChipInfo:
    d = sha256(b"frameboot-chip-info" + seed.to_bytes(8, "little"))
    return ChipInfo(uuid=d[:16], vendor_id=d[16:20], serial=d[20:28],
                    firmware_version=b"\x01\x00\x00\x00",
                    board_version=b"\x01\x00\x00\x00")


def wrong_key_for(key: bytes, seed: int) -> SecretKey:
    """A key of the same length guaranteed to differ from ``key``."""
    rng = random.Random(seed)
    while True:
        candidate = rng.randbytes(len(key))
        if candidate != key:
            return SecretKey(candidate)


def corrupt_flash(dev: DeviceState, spec: AttackSpec) -> None:
    """Apply a flash attack through the unprivileged write path.

    Every byte touched is guaranteed to change. Raises ``RegionLocked``
    without modifying anything if the target overlaps a locked region.
    """
    spec.validate()
    rng = random.Random(spec.seed)
    kind = spec.kind
    if kind is AttackKind.FLASH_BIT_FLIP:
        bit = spec.bit if spec.bit is not None else rng.randrange(FRAME_SIZE * 8)
        addr = spec.frame * FRAME_SIZE + bit // 8
        (old,) = dev.flash_read(addr, 1)
        dev.flash_write(addr, bytes([old ^ (1 << (bit % 8))]))
    elif kind is AttackKind.FLASH_OVERWRITE:
        length = spec.length or rng.randint(1, MAX_OVERWRITE)
        if spec.address is not None:
            addr = spec.address
        else:
            addr = spec.frame * FRAME_SIZE + rng.randrange(FRAME_SIZE - length + 1)
        old = dev.flash_read(addr, length)
        dev.flash_write(addr, bytes(b ^ rng.randint(1, 255) for b in old))
    elif kind is AttackKind.FRAME_REORDER:
        a, b = spec.frame * FRAME_SIZE, spec.partner_frame * FRAME_SIZE
        if dev.is_locked(a, FRAME_SIZE) or dev.is_locked(b, FRAME_SIZE):
            raise RegionLocked("frame_reorder target is write-locked")
        first, second = dev.flash_read(a, FRAME_SIZE), dev.flash_read(b, FRAME_SIZE)
        dev.flash_write(a, second)
        dev.flash_write(b, first)
    else:
        raise ConfigError(f"{kind.value} is not a flash attack")


def intercept(channel: Channel, spec: AttackSpec,
              recorded: bytes | None = None) -> None:
    """Install the channel attack described by ``spec`` on ``channel``.

    ``recorded`` is the message replayed by ``CHANNEL_REPLAY``.
    """
    target = spec.message_target
    rng = random.Random(spec.seed)
    kind = spec.kind

    if kind is AttackKind.CHANNEL_TAMPER:
        def tamper(index: int, direction: Direction, data: bytes) -> list[bytes]:
            if index != target:
                return [data]
            bit = spec.bit if spec.bit is not None else rng.randrange(len(data) * 8)
            mutated = bytearray(data)
            mutated[bit // 8] ^= 1 << (bit % 8)
            return [bytes(mutated)]
        channel.add_interceptor(tamper)
    elif kind is AttackKind.CHANNEL_REPLAY:
        if recorded is None:
            raise ConfigError("channel_replay needs a recorded message")

        def replay(index: int, direction: Direction, data: bytes) -> list[bytes]:
            return [recorded] if index == target else [data]
        channel.add_interceptor(replay)
    elif kind is AttackKind.CHANNEL_FLOOD:
        count = spec.count if spec.count is not None else DEFAULT_FLOOD_COUNT

        def flood(index: int, direction: Direction, data: bytes) -> list[bytes]:
            return [data] * (1 + count) if index == target else [data]
        channel.add_interceptor(flood)
    else:
        raise ConfigError(f"{kind.value} is not a channel attack")


def _endpoints(config: ScenarioConfig, dev: DeviceState, verifier_key: bytes
               ) -> tuple[VerifierSession, ProverSession]:
    verifier = VerifierSession(verifier_key, budget=config.budget,
                               flag_f=config.flag_f, params=config.attest,
                               reference_image=dev.rom.golden_image())
    prover = ProverSession.for_device(dev, budget=config.budget,
                                      costs=config.costs,
                                      resilience_enabled=config.resilience)
    return verifier, prover


def record_message(config: ScenarioConfig, index: int, seed: int) -> bytes:
    """Run an honest session with its own device and return message ``index``."""
    rom = build_rom(config.image, config.key, config.chip_info)
    dev = DeviceState.provision(rom)
    verifier, prover = _endpoints(config, dev, config.key)
    outcome = run_session(verifier, prover, random.Random(seed))
    for i, _, data in outcome.channel.sent:
        if i == index:
            return data
    raise ConfigError(f"honest session has no message {index}")


def run_scenario(spec: AttackSpec, config: ScenarioConfig) -> ScenarioReport:
    """Fresh device and sessions, one attack, the full flow, then grading."""
    spec.validate()
    if not config.flag_f and config.attest is None:
        raise ConfigError("flag_f=0 needs attestation addr/len")
    rom = build_rom(config.image, config.key, config.chip_info)
    dev = DeviceState.provision(rom)
    for frame in config.locked_frames:
        dev.pmp_lock(frame * FRAME_SIZE, FRAME_SIZE)

    blocked = False
    if spec.kind.on_flash:
        try:
            corrupt_flash(dev, spec)
        except RegionLocked:
            blocked = True

    verifier_key = config.key
    if spec.kind is AttackKind.WRONG_KEY:
        verifier_key = wrong_key_for(config.key, spec.seed)
    verifier, prover = _endpoints(config, dev, verifier_key)

    channel = Channel()
    if spec.kind.on_channel:
        recorded = None
        if spec.kind is AttackKind.CHANNEL_REPLAY:
            # the prior session draws its n1 from a different seed
            recorded = record_message(config, spec.message_target,
                                      seed=config.seed + 1_000_003)
        intercept(channel, spec, recorded)

    outcome = run_session(verifier, prover, random.Random(config.seed), channel)

    boot = prover.boot_result
    golden = rom.golden_image()
    flash_intact = dev.flash.snapshot()[:len(golden)] == golden
    detected = (outcome.session_closed
                or (boot is not None and not all(v.passed for v in boot.verdicts))
                or verifier.report_ok is False)
    recovered = boot is not None and boot.recovered_count > 0 and boot.integrity
    final_integrity = flash_intact and (boot is None or boot.integrity)
    return ScenarioReport(spec, detected, recovered, outcome.session_closed,
                          final_integrity, blocked, outcome.command_delivered)


_INT_KEYS = {"frame", "bit", "address", "length", "other_frame", "message",
             "count", "seed", "flag_f", "addr", "len", "resilience",
             "image_size", "budget"}
_KNOWN_KEYS = _INT_KEYS | {"image", "attack", "key", "preset", "lock"}


def parse_config(text: str, base_dir: Path | None = None
                 ) -> tuple[AttackSpec, ScenarioConfig]:
    """Parse a flat ``key=value`` scenario file.

    ``image`` is a path (relative to ``base_dir``) or ``image_size`` asks
    for a seeded synthetic image. ``key`` is hex and defaults to a key
    derived from ``seed``.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        name, value = (part.strip() for part in line.split("=", 1))
        if name not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {name!r}")
        values[name] = value

    ints: dict[str, int] = {}
    for name in _INT_KEYS & values.keys():
        try:
            ints[name] = int(values[name], 0)
        except ValueError:
            raise ConfigError(f"{name} must be an integer") from None

    seed = ints.get("seed", 0)
    try:
        kind = AttackKind(values.get("attack", "none"))
    except ValueError:
        raise ConfigError(f"unknown attack {values['attack']!r}") from None

    if "image" in values:
        path = Path(values["image"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            image = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read image: {exc}") from None
    elif "image_size" in ints:
        image = make_image(ints["image_size"], seed)
    else:
        raise ConfigError("config needs image=<path> or image_size=<n>")
    if not image:
        raise ConfigError("image is empty")

    try:
        key = SecretKey(bytes.fromhex(values["key"])) if "key" in values \
            else default_key(seed)
    except ValueError as exc:
        raise ConfigError(f"bad key: {exc}") from None

    attest = None
    if "addr" in ints or "len" in ints:
        try:
            attest = AttestParams(ints.get("addr", 0), ints.get("len", 0))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    preset = values.get("preset", "paper")
    if preset not in PRESETS:
        raise ConfigError(f"unknown cost preset {preset!r}")
    try:
        locked = tuple(int(x, 0) for x in values["lock"].split(",")) \
            if values.get("lock") else ()
    except ValueError:
        raise ConfigError("lock must be a comma-separated frame list") from None

    spec = AttackSpec(kind=kind, frame=ints.get("frame"), bit=ints.get("bit"),
                      address=ints.get("address"), length=ints.get("length"),
                      other_frame=ints.get("other_frame"),
                      message_index=ints.get("message"),
                      count=ints.get("count"), seed=seed)
    spec.validate()
    config = ScenarioConfig(image=image, key=key,
                            chip_info=default_chip_info(seed), seed=seed,
                            flag_f=bool(ints.get("flag_f", 1)), attest=attest,
                            resilience=bool(ints.get("resilience", 1)),
                            costs=PRESETS[preset], locked_frames=locked,
                            budget=ints.get("budget", DEFAULT_MESSAGE_BUDGET))
    return spec, config


"""Command-line front end.

Exit status: 0 success, 1 verification or authentication failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from dataclasses import replace
from pathlib import Path

from . import timing
from .attestation import AttestParams
from .boot import bootstrap, format_verdicts
from .channel import run_session
from .crypto import SecretKey
from .device import CHIP_INFO_SIZE, ChipInfo, DeviceState, SecureRom, build_rom
from .errors import ConfigError, FramebootError, RegionLocked
from .frame import pack_image, serialize_frames
from .harness import (CSV_HEADER, AttackKind, AttackSpec, corrupt_flash,
                      parse_config, run_scenario)
from .messages import decode_message, message_type
from .protocol import ProverSession, VerifierSession
from .transport import run_session_tcp

SEED_ENV = "SRACARE_SEED"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _key(text: str) -> SecretKey:
    try:
        return SecretKey(bytes.fromhex(text))
    except ValueError as exc:
        raise ConfigError(f"bad key hex: {exc}") from None


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def _load_chip_info(path: str) -> ChipInfo:
    """36 raw bytes, or ``field=hex`` lines naming ChipInfo fields."""
    raw = _read(path)
    if len(raw) == CHIP_INFO_SIZE:
        return ChipInfo.from_bytes(raw)
    fields = {}
    for line in raw.decode("utf-8", "replace").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, _, value = line.partition("=")
        fields[name.strip()] = value.strip()
    try:
        return ChipInfo(**{k: bytes.fromhex(v) for k, v in fields.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad chip info file: {exc}") from None


def _load_rom(path: str) -> SecureRom:
    return SecureRom.from_bytes(_read(path))


def _parse_corrupt(text: str) -> AttackSpec:
    frame, sep, bit = text.partition(":")
    try:
        return AttackSpec(AttackKind.FLASH_BIT_FLIP, frame=int(frame, 0),
                          bit=int(bit, 0) if sep else None)
    except ValueError:
        raise ConfigError(f"--corrupt expects FRAME:BIT, got {text!r}") \
            from None


def _costs(args) -> timing.CycleCosts:
    costs = timing.PRESETS[args.preset]
    if getattr(args, "mhz", None):
        costs = replace(costs, frequency_hz=args.mhz * 1e6)
    return costs


def _corrupt(dev: DeviceState, specs: list[str], seed: int) -> None:
    for text in specs:
        spec = replace(_parse_corrupt(text), seed=seed)
        if spec.frame >= dev.rom.frame_count:
            raise ConfigError(f"--corrupt frame {spec.frame} does not exist")
        try:
            corrupt_flash(dev, spec)
        except RegionLocked:
            print(f"corruption {text} blocked by PMP lock")


def cmd_pack(args) -> int:
    frames = pack_image(_read(args.image), _key(args.key_hex))
    stream = serialize_frames(frames)
    Path(args.output).write_bytes(stream)
    print(f"packed {len(frames)} frames ({len(stream)} bytes) -> {args.output}")
    return EXIT_OK


def cmd_mkrom(args) -> int:
    chip_info = _load_chip_info(args.chip_info) if args.chip_info else ChipInfo()
    rom = build_rom(_read(args.image), _key(args.key_hex), chip_info)
    Path(args.output).write_bytes(rom.to_bytes())
    print(f"ROM with {rom.frame_count} golden frames -> {args.output}")
    return EXIT_OK


def cmd_boot(args) -> int:
    dev = DeviceState.provision(_load_rom(args.rom))
    _corrupt(dev, args.corrupt, args.seed)
    result = bootstrap(dev, dev.rom.key, _costs(args),
                       resilience_enabled=not args.no_resilience)
    print(f"{'frame':>5}  {'verdict':<7}  recovery")
    for v in result.verdicts:
        print(f"{v.index:>5}  {'pass' if v.passed else 'fail':<7}  "
              f"{'recovered' if v.recovered else '-'}")
    for line in format_verdicts(result):
        print(line)
    if result.halted_at is not None:
        print(f"boot halted at frame {result.halted_at}")
    print(f"integrity: {'true' if result.integrity else 'false'}")
    print(f"recovered: {result.recovered_count}")
    print(f"cycles: {result.cycles}")
    return EXIT_OK if result.integrity else EXIT_FAIL


def _run(args, verifier: VerifierSession, prover: ProverSession):
    rng = random.Random(args.seed)
    if args.tcp:
        run_session_tcp(verifier, prover, rng)
        return None
    return run_session(verifier, prover, rng)


def _print_transcript(outcome) -> None:
    if outcome is None:
        return
    for rec in outcome.transcript:
        kind = message_type(decode_message(rec.data)).name \
            if not rec.tampered else "?"
        print(f"{rec.index:>2} {rec.direction.value} {kind:<13} "
              f"{rec.data.hex()}")


def cmd_attest(args) -> int:
    rom = _load_rom(args.rom)
    dev = DeviceState.provision(rom)
    _corrupt(dev, args.corrupt, args.seed)
    try:
        params = AttestParams(args.addr, args.len)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    verifier = VerifierSession(rom.key, flag_f=False, params=params,
                               reference_image=rom.golden_image())
    prover = ProverSession.for_device(dev)
    _print_transcript(_run(args, verifier, prover))
    if verifier.report is None:
        print("CLOSED")
        return EXIT_FAIL
    print(f"status: {verifier.report.status.name}")
    print(f"R = {verifier.report.r.hex()}")
    print(f"verified: {'yes' if verifier.report_ok else 'no'}")
    return EXIT_OK if verifier.report_ok else EXIT_FAIL


def cmd_session(args) -> int:
    rom = _load_rom(args.rom)
    dev = DeviceState.provision(rom)
    key = _key(args.verifier_key_hex) if args.verifier_key_hex else rom.key
    verifier = VerifierSession(key)
    prover = ProverSession.for_device(dev)
    _print_transcript(_run(args, verifier, prover))
    if verifier.finished:
        print("AUTHENTICATED")
        return EXIT_OK
    print(f"CLOSED ({verifier.close_reason or prover.close_reason})")
    return EXIT_FAIL


def cmd_scenario(args) -> int:
    path = Path(args.config)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    spec, config = parse_config(text, path.parent)
    if args.seed_given:
        spec, config.seed = replace(spec, seed=args.seed), args.seed
    print(CSV_HEADER)
    print(run_scenario(spec, config).csv_line())
    return EXIT_OK


def cmd_timing(args) -> int:
    if args.frames < 1:
        raise ConfigError("--frames must be >= 1")
    rep = timing.report(_costs(args), args.frames)
    if args.csv:
        print(timing.CSV_HEADER)
        print(timing.format_csv(rep))
    else:
        print(timing.format_table(rep))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default 0; ${SEED_ENV} overrides)")

    parser = argparse.ArgumentParser(
        prog="frameboot",
        description="Secure boot, recovery and attestation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pack", parents=[common], help="pack an image into frames")
    p.add_argument("image")
    p.add_argument("--key-hex", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("mkrom", parents=[common], help="build a ROM container")
    p.add_argument("image")
    p.add_argument("--key-hex", required=True)
    p.add_argument("--chip-info")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_mkrom)

    def device_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--rom", required=True)
        p.add_argument("--corrupt", action="append", default=[],
                       metavar="FRAME:BIT",
                       help="flip one bit of a frame before running")
        p.add_argument("--preset", choices=sorted(timing.PRESETS),
                       default="paper")

    p = sub.add_parser("boot", parents=[common], help="run the secure bootstrap")
    device_args(p)
    p.add_argument("--no-resilience", action="store_true")
    p.set_defaults(func=cmd_boot)

    p = sub.add_parser("attest", parents=[common],
                       help="authenticate, then attest a flash range")
    device_args(p)
    p.add_argument("--addr", type=lambda s: int(s, 0), required=True)
    p.add_argument("--len", type=lambda s: int(s, 0), required=True)
    p.add_argument("--tcp", action="store_true",
                   help="run over a loopback TCP connection")
    p.set_defaults(func=cmd_attest)

    p = sub.add_parser("session", parents=[common],
                       help="run mutual authentication only")
    p.add_argument("--rom", required=True)
    p.add_argument("--verifier-key-hex")
    p.add_argument("--tcp", action="store_true")
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("scenario", parents=[common],
                       help="run one attack scenario from a config file")
    p.add_argument("config")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("timing", parents=[common],
                       help="bootstrap timing model")
    p.add_argument("--frames", type=int, default=6)
    p.add_argument("--preset", choices=sorted(timing.PRESETS), default="paper")
    p.add_argument("--mhz", type=float)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_timing)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    env_seed = os.environ.get(SEED_ENV)
    args.seed_given = args.seed is not None or env_seed is not None
    try:
        if env_seed is not None:
            args.seed = int(env_seed, 0)
        elif args.seed is None:
            args.seed = 0
        return args.func(args)
    except (FramebootError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

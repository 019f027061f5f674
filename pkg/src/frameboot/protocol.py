"""Verifier and prover session state machines for mutual authentication.

Verifier                               Prover
--------                               ------
start()          -- Challenge(n1) -->
                 <-- ProverAuth(mac, n2) --  handle_challenge()
handle_prover_auth()  -- VerifierAuth(B) -->
                 <-- AuthResult(C) --        handle_verifier_auth()
handle_result()  -- Command(F, D) -->
                 <-- Report(R) --            handle_command()
handle_report()

Each ``handle_*`` raises ``InvalidState`` when called out of order and
leaves the session untouched. ``receive`` is the message-driven entry
point: it enforces the per-session message budget, drops out-of-order
messages and turns any closing condition into an outgoing ``Close``.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum

from .attestation import AttestParams, attest, expected_report
from .boot import BootResult, bootstrap
from .crypto import (SecretKey, derive_k1, digests_equal, generate_n2,
                     hmac_sha256, sha256)
from .device import ERASED_BYTE, DeviceState
from .errors import (CodecError, DeviceError, InvalidState,
                     MalformedChipInfo, MissingAttestParams, OutOfBounds)
from .frame import FRAME_SIZE
from .messages import (AuthResult, Challenge, Close, Command, Message,
                       ProverAuth, Report, ReportStatus, VerifierAuth,
                       decode_message)
from .timing import PAPER_COSTS, CycleCosts

log = logging.getLogger(__name__)

DEFAULT_MESSAGE_BUDGET = 16


class Step(Enum):
    IDLE = "idle"
    SENT_CHALLENGE = "sent_challenge"
    AWAIT_RESULT = "await_result"
    AWAIT_CHALLENGE = "await_challenge"
    SENT_PROVER_AUTH = "sent_prover_auth"
    AUTHENTICATED = "authenticated"
    CLOSED = "closed"


def boot_report_value(k1: bytes, status: ReportStatus,
                      flash_digest: bytes) -> bytes:
    """R for a secure-boot command: HMAC(K1, status || sha256(frames))."""
    return hmac_sha256(k1, bytes([status]) + flash_digest)


def failure_report_value(k1: bytes, status: ReportStatus) -> bytes:
    return hmac_sha256(k1, bytes([status]))


@dataclass
class _Endpoint:
    key: SecretKey
    budget: int = DEFAULT_MESSAGE_BUDGET
    received: int = field(default=0, init=False)
    dropped: int = field(default=0, init=False)
    close_reason: str | None = field(default=None, init=False)

    def __post_init__(self):
        self.key = SecretKey(self.key)

    @property
    def closed(self) -> bool:
        return self.step is Step.CLOSED

    def close(self, reason: str) -> Close:
        if self.step is not Step.CLOSED:
            log.debug("%s closing: %s", type(self).__name__, reason)
            self.step = Step.CLOSED
            self.close_reason = reason
            self.k1 = None
        return Close()

    def receive(self, msg: Message) -> Message | None:
        if self.step is Step.CLOSED:
            return None
        self.received += 1
        if self.received > self.budget:
            return self.close("message budget exhausted")
        if isinstance(msg, Close):
            self.close("peer closed")
            return None
        try:
            return self._dispatch(msg)
        except InvalidState:
            self.dropped += 1
            return None

    def receive_wire(self, data: bytes) -> Message | None:
        if self.step is Step.CLOSED:
            return None
        try:
            msg = decode_message(data)
        except CodecError as exc:
            self.received += 1
            return self.close(f"malformed message: {exc}")
        return self.receive(msg)

    def _dispatch(self, msg: Message) -> Message | None:
        raise NotImplementedError

    def _require(self, step: Step, msg: Message, kind: type) -> None:
        if self.step is not step or not isinstance(msg, kind):
            raise InvalidState(
                f"{type(msg).__name__} not accepted in step {self.step.value}")


@dataclass
class VerifierSession(_Endpoint):
    """Trusted side. ``flag_f`` None means authenticate only.

    ``reference_image`` is the expected flash prefix (serialized golden
    frames); with it the verifier checks every report it receives.
    """

    flag_f: bool | None = None
    params: AttestParams | None = None
    reference_image: bytes | None = None
    step: Step = field(default=Step.IDLE, init=False)
    n1: bytes | None = field(default=None, init=False)
    n2: bytes | None = field(default=None, init=False)
    k1: SecretKey | None = field(default=None, init=False, repr=False)
    c: bool | None = field(default=None, init=False)
    command: Command | None = field(default=None, init=False)
    report: Report | None = field(default=None, init=False)
    report_ok: bool | None = field(default=None, init=False)

    @property
    def finished(self) -> bool:
        if self.step is not Step.AUTHENTICATED:
            return False
        return self.flag_f is None or self.report is not None

    def start(self, rng: random.Random) -> Challenge:
        if self.step is not Step.IDLE:
            raise InvalidState(f"start() in step {self.step.value}")
        self.n1 = rng.randbytes(32)
        self.step = Step.SENT_CHALLENGE
        return Challenge(self.n1)

    def handle_prover_auth(self, msg: ProverAuth) -> VerifierAuth | Close:
        self._require(Step.SENT_CHALLENGE, msg, ProverAuth)
        if not digests_equal(msg.mac, hmac_sha256(self.key, self.n1)):
            return self.close("prover authentication failed")
        self.n2 = msg.n2
        self.k1 = derive_k1(msg.mac, self.n1, msg.n2)
        self.step = Step.AWAIT_RESULT
        return VerifierAuth(hmac_sha256(self.k1, msg.n2))

    def handle_result(self, msg: AuthResult) -> Command | Close | None:
        self._require(Step.AWAIT_RESULT, msg, AuthResult)
        if self.flag_f is False and self.params is None:
            raise MissingAttestParams("attestation intent without parameters")
        self.c = msg.c
        if not msg.c:
            return self.close("prover rejected verifier (C == 0)")
        self.step = Step.AUTHENTICATED
        if self.flag_f is None:
            return None
        self.command = Command(True) if self.flag_f else Command(False,
                                                                 self.params)
        return self.command

    def handle_report(self, msg: Report) -> None:
        if self.command is None:
            raise InvalidState("no command outstanding")
        self._require(Step.AUTHENTICATED, msg, Report)
        if self.report is not None:
            raise InvalidState("report already received")
        self.report = msg
        expected = self.expected_report()
        if expected is not None:
            self.report_ok = (msg.status is ReportStatus.OK
                              and digests_equal(msg.r, expected))

    def expected_report(self) -> bytes | None:
        if self.reference_image is None or self.k1 is None \
                or self.command is None:
            return None
        if self.command.f:
            return boot_report_value(self.k1, ReportStatus.OK,
                                     sha256(self.reference_image))
        d = self.command.d
        reference = self.reference_image.ljust(d.s_addr + d.l,
                                               bytes([ERASED_BYTE]))
        return expected_report(self.k1, reference, d)

    def _dispatch(self, msg: Message) -> Message | None:
        if isinstance(msg, ProverAuth):
            return self.handle_prover_auth(msg)
        if isinstance(msg, AuthResult):
            return self.handle_result(msg)
        if isinstance(msg, Report):
            return self.handle_report(msg)
        raise InvalidState(f"verifier never accepts {type(msg).__name__}")


@dataclass
class ProverSession(_Endpoint):
    """Untrusted device side; the key lives in the device ROM."""

    device: DeviceState | None = None
    costs: CycleCosts = PAPER_COSTS
    resilience_enabled: bool = True
    step: Step = field(default=Step.AWAIT_CHALLENGE, init=False)
    n1: bytes | None = field(default=None, init=False)
    n2: bytes | None = field(default=None, init=False)
    mac: bytes | None = field(default=None, init=False)
    k1: SecretKey | None = field(default=None, init=False, repr=False)
    commands: list[Command] = field(default_factory=list, init=False)
    boot_result: BootResult | None = field(default=None, init=False)

    @classmethod
    def for_device(cls, device: DeviceState, **kwargs) -> "ProverSession":
        return cls(device.rom.key, device=device, **kwargs)

    def handle_challenge(self, msg: Challenge) -> ProverAuth:
        self._require(Step.AWAIT_CHALLENGE, msg, Challenge)
        mac = hmac_sha256(self.key, msg.n1)
        n2 = generate_n2(self.key, self.device.rom_chip_info_bytes(), msg.n1)
        self.n1, self.mac, self.n2 = msg.n1, mac, n2
        self.step = Step.SENT_PROVER_AUTH
        return ProverAuth(mac, n2)

    def handle_verifier_auth(self, msg: VerifierAuth) -> AuthResult:
        self._require(Step.SENT_PROVER_AUTH, msg, VerifierAuth)
        k1 = derive_k1(self.mac, self.n1, self.n2)
        c = digests_equal(msg.b, hmac_sha256(k1, self.n2))
        if c:
            self.k1 = k1
            self.step = Step.AUTHENTICATED
        else:
            self.close("verifier authentication failed")
        return AuthResult(c)

    def handle_command(self, msg: Command) -> Report:
        self._require(Step.AUTHENTICATED, msg, Command)
        self.commands.append(msg)
        try:
            if msg.f:
                return self._secure_boot()
            if msg.d is None:
                return self._failure(ReportStatus.DEVICE_ERROR)
            return Report(attest(self.device, self.k1, msg.d))
        except OutOfBounds:
            return self._failure(ReportStatus.OUT_OF_BOUNDS)
        except DeviceError:
            return self._failure(ReportStatus.DEVICE_ERROR)

    def _secure_boot(self) -> Report:
        dev = self.device
        result = bootstrap(dev, dev.rom.key, self.costs,
                           self.resilience_enabled)
        self.boot_result = result
        status = (ReportStatus.OK if result.integrity
                  else ReportStatus.INTEGRITY_FAILURE)
        frames = dev.flash_read(0, dev.rom.frame_count * FRAME_SIZE)
        return Report(boot_report_value(self.k1, status, sha256(frames)),
                      status)

    def _failure(self, status: ReportStatus) -> Report:
        return Report(failure_report_value(self.k1, status), status)

    def _dispatch(self, msg: Message) -> Message | None:
        if isinstance(msg, Challenge):
            try:
                return self.handle_challenge(msg)
            except MalformedChipInfo:
                return self.close("chip info unreadable")
        if isinstance(msg, VerifierAuth):
            return self.handle_verifier_auth(msg)
        if isinstance(msg, Command):
            return self.handle_command(msg)
        raise InvalidState(f"prover never accepts {type(msg).__name__}")

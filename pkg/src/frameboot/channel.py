"""In-process ordered channel between verifier and prover, plus the driver
that runs one session over it.

Interceptors see every encoded message after it is sent and return the
list of byte strings actually put on the wire (empty to drop, several to
inject). They may corrupt, replace or multiply messages but cannot
reorder what is already queued.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .messages import Message, encode_message
from .protocol import ProverSession, Step, VerifierSession


class Direction(Enum):
    TO_PROVER = "V->P"
    TO_VERIFIER = "P->V"

    @property
    def reverse(self) -> "Direction":
        if self is Direction.TO_PROVER:
            return Direction.TO_VERIFIER
        return Direction.TO_PROVER


Interceptor = Callable[[int, Direction, bytes], list[bytes]]


@dataclass(frozen=True)
class WireRecord:
    index: int
    direction: Direction
    data: bytes
    original: bytes

    @property
    def tampered(self) -> bool:
        return self.data != self.original


class Channel:
    def __init__(self) -> None:
        self.queue: deque[tuple[Direction, bytes]] = deque()
        self.interceptors: list[Interceptor] = []
        self.sent: list[tuple[int, Direction, bytes]] = []
        self.wire: list[WireRecord] = []
        self._next_index = 0

    def add_interceptor(self, fn: Interceptor) -> None:
        self.interceptors.append(fn)

    def send(self, direction: Direction, msg: Message) -> int:
        """Encode, pass through interceptors and queue; returns the index."""
        data = encode_message(msg)
        index = self._next_index
        self._next_index += 1
        self.sent.append((index, direction, data))
        out = [data]
        for fn in self.interceptors:
            out = [piece for item in out for piece in fn(index, direction, item)]
        for piece in out:
            self.queue.append((direction, piece))
            self.wire.append(WireRecord(index, direction, piece, data))
        return index

    def pending(self) -> bool:
        return bool(self.queue)

    def pop(self) -> tuple[Direction, bytes]:
        return self.queue.popleft()


@dataclass
class SessionOutcome:
    verifier: VerifierSession
    prover: ProverSession
    channel: Channel
    timed_out: bool = False
    deliveries: int = 0
    transcript: list[WireRecord] = field(default_factory=list)

    @property
    def authenticated(self) -> bool:
        return (self.verifier.step is Step.AUTHENTICATED
                and self.prover.step is Step.AUTHENTICATED)

    @property
    def command_delivered(self) -> bool:
        return bool(self.prover.commands)

    @property
    def session_closed(self) -> bool:
        return self.verifier.closed or self.prover.closed


def run_session(verifier: VerifierSession, prover: ProverSession,
                rng: random.Random, channel: Channel | None = None
                ) -> SessionOutcome:
    """Drive both endpoints until the channel drains.

    If it drains before the verifier is finished (a dropped or swallowed
    message), both ends close as if a receive timeout fired.
    """
    channel = channel or Channel()
    channel.send(Direction.TO_PROVER, verifier.start(rng))
    deliveries = 0
    while channel.pending():
        direction, data = channel.pop()
        deliveries += 1
        endpoint = prover if direction is Direction.TO_PROVER else verifier
        reply = endpoint.receive_wire(data)
        if reply is not None:
            channel.send(direction.reverse, reply)

    timed_out = not verifier.finished and not (verifier.closed
                                               and prover.closed)
    if timed_out:
        verifier.close("timeout")
        prover.close("timeout")
    return SessionOutcome(verifier, prover, channel, timed_out, deliveries,
                          list(channel.wire))

"""TCP binding: one encoded message per write, framed by its length field."""

from __future__ import annotations

import random
import socket
import threading

from .errors import TruncatedBody
from .messages import HEADER, HEADER_SIZE, Message, encode_message
from .protocol import ProverSession, VerifierSession


def send_message(sock: socket.socket, msg: Message) -> None:
    sock.sendall(encode_message(msg))


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            if buf:
                raise TruncatedBody("connection closed mid-message")
            raise EOFError("connection closed")
        buf += chunk
    return bytes(buf)


def recv_frame(sock: socket.socket) -> bytes:
    """Raw bytes of the next message, header included."""
    header = _recv_exact(sock, HEADER_SIZE)
    _, length = HEADER.unpack(header)
    return header + _recv_exact(sock, length)


def serve_prover(sock: socket.socket, prover: ProverSession) -> None:
    """Answer messages until the prover closes or the peer hangs up."""
    try:
        while not prover.closed:
            reply = prover.receive_wire(recv_frame(sock))
            if reply is not None:
                send_message(sock, reply)
    except (EOFError, TruncatedBody, OSError):
        prover.close("connection lost")


def run_verifier(sock: socket.socket, verifier: VerifierSession,
                 rng: random.Random) -> None:
    send_message(sock, verifier.start(rng))
    try:
        while not verifier.finished and not verifier.closed:
            reply = verifier.receive_wire(recv_frame(sock))
            if reply is not None:
                send_message(sock, reply)
    except socket.timeout:
        verifier.close("timeout")
    except (EOFError, TruncatedBody, OSError):
        verifier.close("connection lost")


def run_session_tcp(verifier: VerifierSession, prover: ProverSession,
                    rng: random.Random, timeout: float = 5.0) -> None:
    """Run one session over a loopback TCP connection."""
    with socket.create_server(("127.0.0.1", 0)) as server:
        port = server.getsockname()[1]

        def accept_and_serve() -> None:
            conn, _ = server.accept()
            with conn:
                conn.settimeout(timeout)
                serve_prover(conn, prover)

        worker = threading.Thread(target=accept_and_serve, daemon=True)
        worker.start()
        with socket.create_connection(("127.0.0.1", port), timeout) as sock:
            run_verifier(sock, verifier, rng)
        worker.join(timeout)
    if not verifier.finished:
        verifier.close(verifier.close_reason or "timeout")

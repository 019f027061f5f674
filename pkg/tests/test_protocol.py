import copy
import hashlib
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frameboot.attestation import AttestParams
from frameboot.channel import Channel, Direction, run_session
from frameboot.crypto import derive_k1, generate_n2, hmac_sha256
from frameboot.device import DeviceState, build_rom
from frameboot.errors import InvalidState, MissingAttestParams
from frameboot.frame import FRAME_SIZE
from frameboot.messages import (AuthResult, Challenge, Command, ProverAuth,
                                Report, ReportStatus, VerifierAuth,
                                encode_message)
from frameboot.protocol import (ProverSession, Step, VerifierSession,
                                boot_report_value)

KEY = bytes(range(100, 132))
ROM = build_rom(random.Random(3).randbytes(5734), KEY)


def endpoints(flag_f=True, params=None, vkey=KEY, budget=16):
    dev = DeviceState.provision(ROM)
    v = VerifierSession(vkey, budget=budget, flag_f=flag_f, params=params,
                        reference_image=ROM.golden_image())
    p = ProverSession.for_device(dev, budget=budget)
    return v, p, dev


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32))
def test_honest_session_completes(seed):
    v, p, _ = endpoints()
    out = run_session(v, p, random.Random(seed))
    assert out.authenticated and v.c is True
    assert v.report_ok is True and out.command_delivered
    assert not out.timed_out


def test_session_values_match_oracle():
    v, p, dev = endpoints()
    out = run_session(v, p, random.Random(9))
    n1 = random.Random(9).randbytes(32)
    assert v.n1 == n1
    mac = hmac_sha256(KEY, n1)
    n2 = generate_n2(KEY, ROM.chip_info.to_bytes(), n1)
    assert v.n2 == p.n2 == n2
    k1 = derive_k1(mac, n1, n2)
    assert v.k1 == p.k1 == k1
    sent = [d for _, _, d in out.channel.sent]
    assert sent[1] == b"\x02\x40\x00" + mac + n2
    assert sent[2] == b"\x03\x20\x00" + hmac_sha256(k1, n2)
    assert v.report.r == boot_report_value(
        k1, ReportStatus.OK, hashlib.sha256(ROM.golden_image()).digest())


def test_attest_only_session():
    params = AttestParams(0, 6 * FRAME_SIZE + 100)
    v, p, _ = endpoints(flag_f=False, params=params)
    run_session(v, p, random.Random(1))
    assert v.report_ok is True and p.boot_result is None


def test_authenticate_only_session():
    v, p, _ = endpoints(flag_f=None)
    out = run_session(v, p, random.Random(1))
    assert out.authenticated and not out.command_delivered
    assert not out.timed_out


def test_out_of_bounds_attest_reports_status():
    v, p, dev = endpoints(flag_f=False,
                          params=AttestParams(2**16 - 10, 100))
    run_session(v, p, random.Random(1))
    assert v.report.status is ReportStatus.OUT_OF_BOUNDS
    assert v.report_ok is False


def test_attest_without_params_raises():
    v, p, _ = endpoints(flag_f=False)
    ch = v.start(random.Random(0))
    vauth = v.handle_prover_auth(p.handle_challenge(ch))
    with pytest.raises(MissingAttestParams):
        v.handle_result(p.handle_verifier_auth(vauth))


def test_wrong_key_never_delivers_command():
    for seed in range(20):
        v, p, _ = endpoints(vkey=bytes(32))
        out = run_session(v, p, random.Random(seed))
        assert out.session_closed and not out.command_delivered
        assert v.close_reason == "prover authentication failed"


def test_prover_rejects_forged_verifier_auth():
    v, p, _ = endpoints()
    p.handle_challenge(v.start(random.Random(0)))
    result = p.handle_verifier_auth(VerifierAuth(bytes(32)))
    assert result == AuthResult(False) and p.closed and p.k1 is None


def _tamper_all_bits(index):
    honest = endpoints()[0:2]
    base = run_session(*honest, random.Random(5)).channel.sent[index][2]
    for bit in range(len(base) * 8):
        v, p, _ = endpoints()
        ch = Channel()

        def flip(i, d, data, bit=bit):
            if i != index:
                return [data]
            m = bytearray(data)
            m[bit // 8] ^= 1 << (bit % 8)
            return [bytes(m)]
        ch.add_interceptor(flip)
        out = run_session(v, p, random.Random(5), ch)
        assert not out.command_delivered, bit
        assert out.session_closed


@pytest.mark.parametrize("index", [0, 1, 2])
def test_single_bit_tamper_blocks_command(index):
    _tamper_all_bits(index)


def test_replayed_prover_auth_rejected():
    v, p, _ = endpoints()
    old = run_session(v, p, random.Random(1)).channel.sent[1][2]
    v, p, _ = endpoints()
    ch = Channel()
    ch.add_interceptor(lambda i, d, data: [old] if i == 1 else [data])
    out = run_session(v, p, random.Random(2), ch)
    assert out.session_closed and not out.command_delivered


def test_flood_exhausts_budget():
    v, p, _ = endpoints()
    ch = Channel()
    ch.add_interceptor(lambda i, d, data: [data] * 65 if i == 0 else [data])
    out = run_session(v, p, random.Random(0), ch)
    assert p.closed and p.close_reason == "message budget exhausted"
    assert not out.command_delivered
    assert p.received == 17


def test_out_of_order_calls_leave_state_untouched():
    v, p, _ = endpoints()
    rng = random.Random(0)
    bogus = [Challenge(bytes(32)), ProverAuth(bytes(32), bytes(32)),
             VerifierAuth(bytes(32)), AuthResult(True), Command(True),
             Report(bytes(32))]
    handlers = {
        "v": [v.handle_prover_auth, v.handle_result, v.handle_report],
        "p": [p.handle_challenge, p.handle_verifier_auth, p.handle_command],
    }
    def state():
        fields = {k: val for k, val in p.__dict__.items() if k != "device"}
        return copy.deepcopy((v.__dict__, fields, p.device.flash.snapshot(),
                              p.device.cycle_counter))

    def attempt(handler, msg):
        before = state()
        with pytest.raises(InvalidState):
            handler(msg)
        assert state() == before

    # prover waits for a challenge: everything else is out of order
    for h in handlers["p"][1:]:
        for m in bogus:
            attempt(h, m)
    # verifier has not started yet
    for h in handlers["v"]:
        for m in bogus:
            attempt(h, m)
    ch = v.start(rng)
    with pytest.raises(InvalidState):
        v.start(rng)
    pa = p.handle_challenge(ch)
    for m in bogus:
        attempt(p.handle_challenge, m)
        attempt(p.handle_command, m)
        attempt(v.handle_result, m)
    va = v.handle_prover_auth(pa)
    attempt(v.handle_prover_auth, pa)
    res = p.handle_verifier_auth(va)
    attempt(p.handle_verifier_auth, va)
    cmd = v.handle_result(res)
    attempt(v.handle_result, res)
    rep = p.handle_command(cmd)
    v.handle_report(rep)
    attempt(v.handle_report, rep)
    assert v.report_ok


def test_out_of_order_message_dropped_by_receive():
    v, p, _ = endpoints()
    assert p.receive(VerifierAuth(bytes(32))) is None
    assert p.dropped == 1 and p.step is Step.AWAIT_CHALLENGE


def test_malformed_wire_closes():
    v, p, _ = endpoints()
    reply = p.receive_wire(b"\x01\x05\x00abc")
    assert p.closed and reply is not None


def test_close_clears_session_key():
    v, p, _ = endpoints()
    run_session(v, p, random.Random(0))
    assert p.k1 is not None
    p.close("done")
    v.close("done")
    assert p.k1 is None and v.k1 is None
    assert p.receive(Challenge(bytes(32))) is None


def test_key_never_on_the_wire():
    for seed in range(200):
        v, p, _ = endpoints()
        out = run_session(v, p, random.Random(seed))
        for rec in out.transcript:
            assert KEY not in rec.data
        assert KEY.hex() not in repr(v) + repr(p)


def test_direction_reverse():
    assert Direction.TO_PROVER.reverse is Direction.TO_VERIFIER
    assert Direction.TO_VERIFIER.reverse is Direction.TO_PROVER


def test_encoded_auth_message_sizes():
    v, p, _ = endpoints()
    sent = run_session(v, p, random.Random(0)).channel.sent
    assert [len(d) for _, _, d in sent[:3]] == [35, 67, 35]
    assert encode_message(Challenge(v.n1)) == sent[0][2]

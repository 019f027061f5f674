from __future__ import annotations

import random

import pytest

from frameboot.crypto import SecretKey
from frameboot.device import ChipInfo, DeviceState, build_rom

APP_SIZE = 5734  # the 5.6 KB test application


@pytest.fixture
def key() -> SecretKey:
    return SecretKey(bytes(range(32)))


@pytest.fixture
def chip_info() -> ChipInfo:
    return ChipInfo(uuid=bytes.fromhex("00112233445566778899aabbccddeeff"),
                    vendor_id=b"RVSC", serial=b"SN000042",
                    firmware_version=b"\x01\x02\x00\x00",
                    board_version=b"\x03\x00\x00\x00")


@pytest.fixture
def image() -> bytes:
    return random.Random(7).randbytes(APP_SIZE)


@pytest.fixture
def rom(image, key, chip_info):
    return build_rom(image, key, chip_info)


@pytest.fixture
def dev(rom) -> DeviceState:
    return DeviceState.provision(rom)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

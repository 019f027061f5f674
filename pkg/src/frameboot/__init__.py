"""Secure boot with onboard recovery, mutual authentication and remote
attestation for a simulated embedded prover."""

from .attestation import AttestParams, attest
from .boot import BootResult, FrameVerdict, bootstrap, chain_of_trust
from .channel import Channel, Direction, run_session
from .crypto import (SecretKey, derive_k1, derive_k_prime, generate_n2,
                     hmac_sha256, sha256)
from .device import ChipInfo, DeviceState, SecureRom, build_rom
from .frame import (FRAME_SIZE, HEADER_SIZE, PAYLOAD_SIZE, Frame, FrameHeader,
                    deserialize_frame, pack_image, serialize_frame,
                    verify_frame)
from .harness import AttackKind, AttackSpec, ScenarioReport, run_scenario
from .messages import decode_message, encode_message
from .protocol import ProverSession, Step, VerifierSession
from .recovery import recover
from .timing import PAPER_COSTS, CycleCosts, TimingReport

__version__ = "0.1.0"

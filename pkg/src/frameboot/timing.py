"""Bootstrap cycle-cost model.

Boot cost is a first-frame cost plus a uniform cost for every remaining
frame, once for a plain boot ("without") and once for the verified boot
with recovery support ("with"). The added boot time is the difference of
the two totals; its wall-clock value comes only from the clock frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

# HMAC-SHA256 over one 256-byte block on the FPGA prototype, kept as named
# presets for callers that want to scale per-frame costs by crypto choice.
HMAC_SOFTWARE_CYCLES = 47033
HMAC_HARDWARE_CYCLES = 2926


@dataclass(frozen=True)
class CycleCosts:
    first_frame_without: int
    first_frame_with: int
    per_frame_without: int
    per_frame_with: int
    frequency_hz: float
    per_recovery: int = 0

    def __post_init__(self):
        for name in ("first_frame_without", "first_frame_with",
                     "per_frame_without", "per_frame_with", "frequency_hz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.first_frame_with < self.first_frame_without:
            raise ValueError("first_frame_with < first_frame_without")
        if self.per_frame_with < self.per_frame_without:
            raise ValueError("per_frame_with < per_frame_without")
        if self.per_recovery < 0:
            raise ValueError("per_recovery must be >= 0")

    @classmethod
    def from_aggregate(cls, first_without: int, rest_without: int,
                       first_with: int, rest_with: int, n_frames: int,
                       frequency_hz: float) -> "CycleCosts":
        """Build from totals reported for "the rest of the frames".

        The aggregates must split evenly over ``n_frames - 1`` frames.
        """
        rest = n_frames - 1
        if rest < 1:
            raise ValueError("need at least two frames to split aggregates")
        if rest_without % rest or rest_with % rest:
            raise ValueError("aggregate cycles do not divide evenly")
        return cls(first_without, first_with, rest_without // rest,
                   rest_with // rest, frequency_hz)


# 553611 / 103330 cycles without, 576083 / 133790 with, over six frames at
# 100 MHz; both "rest of frames" totals divide exactly by five.
PAPER_COSTS = CycleCosts.from_aggregate(
    first_without=553611, rest_without=103330,
    first_with=576083, rest_with=133790,
    n_frames=6, frequency_hz=100e6)

PRESETS = {"paper": PAPER_COSTS}


@dataclass(frozen=True)
class TimingReport:
    n_frames: int
    total_cycles_without: int
    total_cycles_with: int
    t_delta_cycles: int
    d_delta_seconds: float
    overhead_fraction: float
    frequency_hz: float

    @property
    def time_without_seconds(self) -> float:
        return self.total_cycles_without / self.frequency_hz

    @property
    def time_with_seconds(self) -> float:
        return self.total_cycles_with / self.frequency_hz


def _check_frames(n_frames: int) -> None:
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")


def total_cycles(costs: CycleCosts, n_frames: int, secure: bool) -> int:
    _check_frames(n_frames)
    if secure:
        return costs.first_frame_with + (n_frames - 1) * costs.per_frame_with
    return costs.first_frame_without + (n_frames - 1) * costs.per_frame_without


def t_delta(costs: CycleCosts, n_frames: int) -> int:
    """Extra boot cycles: first-frame delta plus per-frame delta for the rest."""
    _check_frames(n_frames)
    return ((costs.first_frame_with - costs.first_frame_without)
            + (n_frames - 1) * (costs.per_frame_with - costs.per_frame_without))


def report(costs: CycleCosts, n_frames: int) -> TimingReport:
    without = total_cycles(costs, n_frames, secure=False)
    with_ = total_cycles(costs, n_frames, secure=True)
    delta = t_delta(costs, n_frames)
    return TimingReport(
        n_frames=n_frames,
        total_cycles_without=without,
        total_cycles_with=with_,
        t_delta_cycles=delta,
        d_delta_seconds=delta / costs.frequency_hz,
        overhead_fraction=with_ / without - 1,
        frequency_hz=costs.frequency_hz,
    )


CSV_HEADER = "frames,cycles_without,cycles_with,t_delta_cycles,d_delta_us,overhead_pct"


def format_csv(rep: TimingReport) -> str:
    return (f"{rep.n_frames},{rep.total_cycles_without},"
            f"{rep.total_cycles_with},{rep.t_delta_cycles},"
            f"{rep.d_delta_seconds * 1e6:.2f},"
            f"{rep.overhead_fraction * 100:.2f}")


def format_table(rep: TimingReport) -> str:
    mhz = rep.frequency_hz / 1e6
    rows = [
        ("", "without", "with"),
        ("frames", str(rep.n_frames), str(rep.n_frames)),
        ("total cycles", str(rep.total_cycles_without),
         str(rep.total_cycles_with)),
        ("frequency (MHz)", f"{mhz:g}", f"{mhz:g}"),
        ("time (us)", f"{rep.time_without_seconds * 1e6:.2f}",
         f"{rep.time_with_seconds * 1e6:.2f}"),
    ]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = [f"{a:<{widths[0]}}  {b:>{widths[1]}}  {c:>{widths[2]}}"
             for a, b, c in rows]
    lines.append(f"T_delta = {rep.t_delta_cycles} cycles")
    lines.append(f"D_delta = {rep.d_delta_seconds * 1e6:.2f}us")
    lines.append(f"overhead = {rep.overhead_fraction * 100:.2f}% "
                 f"(~{round(rep.overhead_fraction * 100)}%)")
    return "\n".join(lines)

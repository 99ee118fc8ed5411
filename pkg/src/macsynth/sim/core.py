from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..blocks import DCF_GENOME, Genome
from ..logic import DEFAULT_RULES, ContractViolation, RuleTable, validate
from . import _engine as eng
from .scenario import Scenario


class EmptyResultError(ValueError):
    """Raised for a run that would simulate no time at all."""


@dataclass(frozen=True)
class SimResult:
    """Counters from one deterministic run.

    Bit counts are payload bits. ``energy_units`` counts transmitting
    (node, slot) pairs. The last five fields split the offered packets by
    their fate at the end of the run.
    """

    delivered_payload_bits: int
    avg_throughput_bps: float
    normalized_throughput: float
    collisions: int
    corrupted_frames: int
    tx_attempts: int
    control_overhead_bits: int
    dropped_packets: int
    energy_units: int
    offered_bits: int
    dropped_bits: int
    queued_bits: int
    in_flight_bits: int
    duration: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.columns())

    def to_csv_row(self) -> str:
        return ",".join(_fmt(getattr(self, c)) for c in self.columns())

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def empty(cls, duration: float) -> "SimResult":
        return cls(0, 0.0, 0.0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, duration)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _result(stats: np.ndarray, scenario: Scenario) -> SimResult:
    bits = scenario.app_packet_bytes * 8
    delivered = int(stats[eng.S_DELIVERED]) * bits
    avg = delivered / scenario.duration
    return SimResult(
        delivered_payload_bits=delivered,
        avg_throughput_bps=avg,
        normalized_throughput=avg / scenario.channel_capacity,
        collisions=int(stats[eng.S_COLLISIONS]),
        corrupted_frames=int(stats[eng.S_CORRUPTED]),
        tx_attempts=int(stats[eng.S_ATTEMPTS]),
        control_overhead_bits=int(stats[eng.S_CTRL_BITS]),
        dropped_packets=int(stats[eng.S_DROPPED]),
        energy_units=int(stats[eng.S_ENERGY]),
        offered_bits=int(stats[eng.S_OFFERED]) * bits,
        dropped_bits=int(stats[eng.S_DROPPED]) * bits,
        queued_bits=int(stats[eng.S_QUEUED]) * bits,
        in_flight_bits=int(stats[eng.S_INFLIGHT]) * bits,
        duration=scenario.duration,
    )


_POLICY = {"off": 0, "BEB": 1, "EIED": 2}


def _engine_call(genome: Genome, scenario: Scenario, trace_cap: int):
    return eng.run_engine(
        np.uint64(scenario.seed & 0xFFFFFFFFFFFFFFFF), scenario.num_nodes, scenario.n_slots,
        scenario.slot, scenario.duration, scenario.packet_rate, scenario.app_packet_bytes,
        _POLICY[genome.backoff], genome.ack, genome.rts_cts, genome.carrier_sense,
        genome.cw_min, genome.payload_limit, genome.rate_mbps, scenario.ber, trace_cap)


def _check(genome: Genome, scenario: Scenario, rules: RuleTable) -> None:
    report = validate(genome, rules)
    if not report.valid:
        raise ContractViolation(f"genome {genome} fails the logic controller: {report}")
    if scenario.duration <= 0 or scenario.n_slots == 0:
        raise EmptyResultError("scenario duration must cover at least one slot")


def run(genome: Genome, scenario: Scenario, rules: RuleTable = DEFAULT_RULES) -> SimResult:
    """Simulate ``scenario`` with every node running the protocol ``genome``."""
    _check(genome, scenario, rules)
    stats, _ = _engine_call(genome, scenario, 0)
    return _result(stats, scenario)


def run_traced(genome: Genome, scenario: Scenario, rules: RuleTable = DEFAULT_RULES,
               capacity: int = 200_000) -> tuple[SimResult, np.ndarray]:
    """Like :func:`run` but also returns the transmission log.

    Rows are ``(start_slot, duration_slots, sender, kind)`` with kind 0 data,
    1 RTS, 2 CTS, 3 ACK and 4 a NAV reservation announced to the other nodes.
    """
    _check(genome, scenario, rules)
    stats, trace = _engine_call(genome, scenario, capacity)
    if stats[eng.S_TRACE_OVERFLOW]:
        raise RuntimeError("trace capacity exceeded; pass a larger capacity")
    return _result(stats, scenario), trace


def dcf_genome(rts_cts: bool = False) -> Genome:
    return DCF_GENOME.replace(rts_cts=1) if rts_cts else DCF_GENOME


def run_dcf(scenario: Scenario, rts_cts: bool = False) -> SimResult:
    """The 802.11 DCF composition: BEB, ACK, carrier sense, CWmin 15, 54 Mb/s."""
    return run(dcf_genome(rts_cts), scenario)

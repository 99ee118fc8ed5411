"""Reward functions mapping a simulation result to a scalar."""
from __future__ import annotations

from ..sim import SimResult


def reward_throughput(result: SimResult) -> float:
    """Average throughput normalized by channel capacity."""
    return result.normalized_throughput


def reward_energy_weighted(result: SimResult, w0: float, w1: float) -> float:
    """``w0`` times the delivery ratio minus ``w1`` times energy per delivered bit."""
    if w0 < 0 or w1 < 0:
        raise ValueError("weights must be non-negative")
    delivered = result.delivered_payload_bits
    ratio = delivered / result.offered_bits if result.offered_bits else 0.0
    return w0 * ratio - w1 * (result.energy_units / max(delivered, 1))

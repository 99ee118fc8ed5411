"""Frame sizes, slot timing, bit errors and contention-window updates."""
from __future__ import annotations

import math
from typing import Sequence

from numba import njit

SLOT_SECONDS = 0.0002
CHANNEL_CAPACITY_BPS = 10e6

MAC_HEADER_BYTES = 34
ACK_BYTES = 14
RTS_BYTES = 20
CTS_BYTES = 14
CONTROL_RATE_MBPS = 6

PREAMBLE_SLOTS = 1
DIFS_SLOTS = 2
SIFS_SLOTS = 1
RETRY_LIMIT = 7
CW_MAX = 1023

BEB = 1
EIED = 2
SUCCESS = 0
FAILURE = 1


@njit(cache=True)
def _tx_slots(nbytes, rate_mbps, slot_seconds):
    bits_per_slot = rate_mbps * 1e6 * slot_seconds
    # round before ceil so exact multiples are not pushed up by float error
    q = round(nbytes * 8 / bits_per_slot, 9)
    return PREAMBLE_SLOTS + int(math.ceil(q))


def transmission_duration(nbytes: int, rate_mbps: float, slot_seconds: float = SLOT_SECONDS) -> int:
    """Airtime in slots: one preamble slot plus the serialisation time, rounded up."""
    if nbytes <= 0:
        raise ValueError("frame must carry at least one byte")
    return _tx_slots(nbytes, float(rate_mbps), slot_seconds)


def ack_timeout_slots(slot_seconds: float = SLOT_SECONDS) -> int:
    return SIFS_SLOTS + transmission_duration(ACK_BYTES, CONTROL_RATE_MBPS, slot_seconds) + 1


def corruption_probability(bits: int, ber: float) -> float:
    return -math.expm1(bits * math.log1p(-ber)) if ber > 0 else 0.0


def frame_corrupt(bits: int, ber: float, stream) -> bool:
    """One corruption draw for a frame of ``bits`` bits from the channel stream."""
    if bits <= 0:
        raise ValueError("bits must be positive")
    if ber <= 0:
        return False
    return stream.random() < corruption_probability(bits, ber)


@njit(cache=True)
def backoff_next_cw(policy, cw, outcome, cw_min):
    """Contention window after an attempt; windows stay of the form 2^k - 1."""
    if outcome == FAILURE:
        return min(2 * (cw + 1) - 1, CW_MAX)
    if policy == EIED:
        return max((cw + 1) // 2 - 1, cw_min)
    return cw_min


def build_frame(queue: Sequence[int], payload_limit: int, head_sent: int = 0) -> list[int]:
    """Payload bytes taken from each queued packet for the next frame.

    ``queue`` holds packet sizes in bytes, head first; ``head_sent`` is how much
    of the head packet earlier fragments already carried. A continuing or
    oversized head packet yields a single fragment; otherwise whole packets are
    packed while they fit.
    """
    if not queue:
        raise ValueError("queue is empty")
    head = queue[0] - head_sent
    if head_sent > 0 or head > payload_limit:
        return [min(head, payload_limit)]
    taken, room = [], payload_limit
    for size in queue:
        if size > room:
            break
        taken.append(size)
        room -= size
    return taken

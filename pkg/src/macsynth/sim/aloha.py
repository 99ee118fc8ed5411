"""Unslotted (pure) ALOHA baseline.

Nodes start a transmission the instant a packet is ready, with no carrier
sense, NAV or handshake. Start instants are continuous; airtimes use the
same slot-quantized durations as the genome simulator so the two are
compared on equal PHY terms. With acknowledgements on, a receiver answers
SIFS after an intact frame; a sender that hears no ACK waits a uniform
1..16 slots and tries again, dropping the packet after the retry limit.
Every frame carries exactly one application packet.
"""
from __future__ import annotations

import heapq
import math

import numpy as np
from numba import njit

from ..rng import CHANNEL_STREAM, uniform
from . import _engine as eng
from .core import EmptyResultError, SimResult, _result
from .phy import (ACK_BYTES, CONTROL_RATE_MBPS, MAC_HEADER_BYTES, PREAMBLE_SLOTS, RETRY_LIMIT,
                  SIFS_SLOTS)
from .scenario import Scenario

ALOHA_MAX_DELAY_SLOTS = 16

_END = 0  # ends sort before starts at the same instant: intervals are half-open
_START_DATA = 1
_START_ACK = 2


@njit(cache=True)
def _airtime(nbytes, rate_mbps, preamble, slot_s):
    q = round(nbytes * 8 / (rate_mbps * 1e6 * slot_s), 9)
    return preamble + int(math.ceil(q))


@njit(cache=True)
def _aloha_engine(seed, n_nodes, slot_s, duration, pkt_rate, pkt_bytes, ber, ack, rate_mbps,
                  header_bytes, preamble):
    stats = np.zeros(eng.N_STATS, np.int64)
    offsets, arrivals = eng.generate_arrivals(seed, n_nodes, pkt_rate, duration, slot_s)
    stats[eng.S_OFFERED] = arrivals.shape[0]

    data_slots = _airtime(pkt_bytes + header_bytes, rate_mbps, preamble, slot_s)
    ack_slots = _airtime(ACK_BYTES, CONTROL_RATE_MBPS, preamble, slot_s)
    timeout = (SIFS_SLOTS + ack_slots + 1) * slot_s

    cur = offsets[:-1].copy()
    retries = np.zeros(n_nodes, np.int64)
    in_flight = np.zeros(n_nodes, np.bool_)
    mac_ctr = np.zeros(n_nodes, np.int64)
    ch_ctr = 0

    # transmission table; a node has at most one data frame and one ACK on air
    cap = 4 * n_nodes + 4
    tx_end = np.zeros(cap, np.float64)
    tx_hit = np.zeros(cap, np.bool_)
    tx_node = np.zeros(cap, np.int64)
    tx_ack = np.zeros(cap, np.bool_)
    free = [k for k in range(cap)]
    active = [0]
    active.pop()

    # heap entries: (time, kind, subject, sequence)
    heap = [(0.0, 0, 0, 0)]
    heap.pop()
    seq = 0
    for i in range(n_nodes):
        if cur[i] < offsets[i + 1]:
            heapq.heappush(heap, (arrivals[cur[i]], _START_DATA, i, seq))
            seq += 1

    while len(heap) > 0:
        t, kind, subj, _ = heapq.heappop(heap)
        if t >= duration:
            break
        if kind == _END:
            k = subj
            for j in range(len(active)):
                if active[j] == k:
                    active.pop(j)
                    break
            free.append(k)
            i = tx_node[k]
            ok = not tx_hit[k]
            if not ok:
                stats[eng.S_COLLISIONS] += 1
            nbytes = ACK_BYTES if tx_ack[k] else pkt_bytes + header_bytes
            if ok and ber > 0.0:
                u = uniform(seed, CHANNEL_STREAM, ch_ctr)
                ch_ctr += 1
                if u < -math.expm1(nbytes * 8 * math.log1p(-ber)):
                    stats[eng.S_CORRUPTED] += 1
                    ok = False
            next_t = -1.0
            if tx_ack[k]:
                if ok:
                    stats[eng.S_DELIVERED] += 1
                    cur[i] += 1
                    retries[i] = 0
                    in_flight[i] = False
                    next_t = t
                else:
                    next_t = -2.0
            elif not ack:
                if ok:
                    stats[eng.S_DELIVERED] += 1
                else:
                    stats[eng.S_DROPPED] += 1
                cur[i] += 1
                in_flight[i] = False
                next_t = t
            elif ok:
                heapq.heappush(heap, (t + SIFS_SLOTS * slot_s, _START_ACK, i, seq))
                seq += 1
            else:
                next_t = -2.0
            if next_t == -2.0:
                # failure noticed when the ACK timeout expires
                fail_t = (t - (SIFS_SLOTS + ack_slots) * slot_s if tx_ack[k] else t) + timeout
                retries[i] += 1
                if retries[i] > RETRY_LIMIT:
                    stats[eng.S_DROPPED] += 1
                    cur[i] += 1
                    retries[i] = 0
                    in_flight[i] = False
                    next_t = fail_t
                else:
                    u = uniform(seed, 2 * i + 1, mac_ctr[i])
                    mac_ctr[i] += 1
                    delay = 1 + int(u * ALOHA_MAX_DELAY_SLOTS)
                    heapq.heappush(heap, (fail_t + delay * slot_s, _START_DATA, i, seq))
                    seq += 1
            if next_t >= 0.0 and cur[i] < offsets[i + 1]:
                heapq.heappush(heap, (max(next_t, arrivals[cur[i]]), _START_DATA, i, seq))
                seq += 1
            continue

        # a transmission starts now
        i = subj
        k = free.pop()
        is_ack = kind == _START_ACK
        dur = ack_slots if is_ack else data_slots
        tx_end[k] = t + dur * slot_s
        tx_node[k] = i
        tx_ack[k] = is_ack
        tx_hit[k] = False
        for j in active:
            if tx_end[j] > t:
                tx_hit[j] = True
                tx_hit[k] = True
        active.append(k)
        end_in = min(tx_end[k], duration)
        stats[eng.S_ENERGY] += dur if tx_end[k] <= duration else int(
            math.ceil(round((end_in - t) / slot_s, 9)))
        if is_ack:
            stats[eng.S_CTRL_BITS] += ACK_BYTES * 8
        else:
            stats[eng.S_ATTEMPTS] += 1
            stats[eng.S_DATA_FRAMES] += 1
            if in_flight[i]:
                stats[eng.S_RETRIES] += 1
            in_flight[i] = True
        heapq.heappush(heap, (tx_end[k], _END, k, seq))
        seq += 1

    for i in range(n_nodes):
        left = offsets[i + 1] - cur[i]
        if left > 0 and in_flight[i]:
            stats[eng.S_INFLIGHT] += 1
            left -= 1
        stats[eng.S_QUEUED] += left
    return stats


def run_pure_aloha(scenario: Scenario, *, ack: bool = True, rate_mbps: float = 54,
                   header_bytes: int = MAC_HEADER_BYTES,
                   preamble_slots: int = PREAMBLE_SLOTS) -> SimResult:
    """Simulate every node running pure ALOHA.

    ``ack=False`` gives the textbook variant: each packet is sent once and the
    sender moves on whatever happens. Setting ``header_bytes=0``,
    ``preamble_slots=0`` and ``rate_mbps`` to the channel capacity makes
    airtime equal payload / capacity, so normalized throughput is directly
    the fraction of channel time carrying successful frames.
    """
    if scenario.duration <= 0 or scenario.n_slots == 0:
        raise EmptyResultError("scenario duration must cover at least one slot")
    stats = _aloha_engine(
        np.uint64(scenario.seed & 0xFFFFFFFFFFFFFFFF), scenario.num_nodes, scenario.slot,
        scenario.duration, scenario.packet_rate, scenario.app_packet_bytes, scenario.ber,
        ack, float(rate_mbps), int(header_bytes), int(preamble_slots))
    return _result(stats, scenario)

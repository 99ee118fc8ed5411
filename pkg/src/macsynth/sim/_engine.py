"""Slot-level MAC engine (numba).

Single collision domain. Every transmission, including the responder's CTS
and ACK, is entered into a per-slot occupancy count when it is scheduled; a
frame is received only if no slot of its span carried a second transmission
and its corruption draw passes. Judging happens in the first slot after a
frame ends, before any new transmission starts in that slot.

Per-slot order: (1) due exchange events, (2) carrier sensing of the previous
slot, (3) contention decisions and new transmissions, nodes in index order.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..rng import CHANNEL_STREAM, uniform
from .phy import (ACK_BYTES, CTS_BYTES, DIFS_SLOTS, FAILURE, MAC_HEADER_BYTES, RETRY_LIMIT,
                  RTS_BYTES, SIFS_SLOTS, SUCCESS, backoff_next_cw, _tx_slots)

# node phases
IDLE = 0
CONTEND = 1
BUSY = 2

# exchange stages (processed at evt)
JUDGE_RTS = 1
JUDGE_CTS = 2
JUDGE_DATA = 3
JUDGE_ACK = 4
FAIL = 5

# trace kinds
K_DATA = 0
K_RTS = 1
K_CTS = 2
K_ACK = 3
K_NAV = 4

# stats layout
S_OFFERED = 0
S_DELIVERED = 1
S_DROPPED = 2
S_QUEUED = 3
S_INFLIGHT = 4
S_COLLISIONS = 5
S_CORRUPTED = 6
S_ATTEMPTS = 7
S_CTRL_BITS = 8
S_ENERGY = 9
S_TRACE_LEN = 10
S_TRACE_OVERFLOW = 11
S_DATA_FRAMES = 12
S_RETRIES = 13
N_STATS = 14

OCC_MARGIN = 64


@njit(cache=True)
def generate_arrivals(seed, n_nodes, pkt_rate, duration, slot_s):
    """Poisson arrival times per node, flattened with CSR offsets."""
    offsets = np.zeros(n_nodes + 1, np.int64)
    if pkt_rate <= 0.0:
        return offsets, np.zeros(0, np.float64)
    for i in range(n_nodes):
        t = 0.0
        k = 0
        while True:
            u = uniform(seed, 2 * i, k)
            k += 1
            t += -math.log1p(-u) / pkt_rate
            if t >= duration:
                break
        offsets[i + 1] = offsets[i] + (k - 1)
    times = np.empty(offsets[n_nodes], np.float64)
    for i in range(n_nodes):
        t = 0.0
        for k in range(offsets[i + 1] - offsets[i]):
            u = uniform(seed, 2 * i, k)
            t += -math.log1p(-u) / pkt_rate
            times[offsets[i] + k] = t
    return offsets, times


@njit(cache=True)
def _register(occ, n_slots, start, dur, stats, trace, node, kind):
    for x in range(start, start + dur):
        occ[x] += 1
    end = min(start + dur, n_slots)
    if end > start:
        stats[S_ENERGY] += end - start
    _trace(trace, stats, start, dur, node, kind)


@njit(cache=True)
def _trace(trace, stats, start, dur, node, kind):
    if trace.shape[0] == 0:
        return
    n = stats[S_TRACE_LEN]
    if n >= trace.shape[0]:
        stats[S_TRACE_OVERFLOW] = 1
        return
    trace[n, 0] = start
    trace[n, 1] = dur
    trace[n, 2] = node
    trace[n, 3] = kind
    stats[S_TRACE_LEN] = n + 1


@njit(cache=True)
def _clear(occ, start, dur):
    for x in range(start, start + dur):
        if occ[x] > 1:
            return False
    return True


@njit(cache=True)
def _received(occ, start, dur, nbytes, ber, seed, ch_ctr, stats):
    """Collision check plus one corruption draw for an unhit frame."""
    if not _clear(occ, start, dur):
        stats[S_COLLISIONS] += 1
        return False
    if ber > 0.0:
        u = uniform(seed, CHANNEL_STREAM, ch_ctr[0])
        ch_ctr[0] += 1
        p = -math.expm1(nbytes * 8 * math.log1p(-ber))
        if u < p:
            stats[S_CORRUPTED] += 1
            return False
    return True


@njit(cache=True)
def _resolve_delivered(i, f_pkt, e_pkt, status, damaged, stats):
    for q in range(f_pkt[i], e_pkt[i]):
        if damaged[q]:
            status[q] = 2
            stats[S_DROPPED] += 1
        else:
            status[q] = 1
            stats[S_DELIVERED] += 1


@njit(cache=True)
def _resolve_lost(i, f_pkt, e_pkt, e_off, cur_pkt, cur_off, purge, status, damaged, stats):
    for q in range(f_pkt[i], e_pkt[i]):
        damaged[q] = 1
        status[q] = 2
        stats[S_DROPPED] += 1
    if e_off[i] > 0:
        q = e_pkt[i]
        damaged[q] = 1
        if purge:
            status[q] = 2
            stats[S_DROPPED] += 1
            cur_pkt[i] = q + 1
            cur_off[i] = 0


@njit(cache=True)
def run_engine(seed, n_nodes, n_slots, slot_s, duration, pkt_rate, pkt_bytes,
               policy, ack, rts, cs, cw_min, payload_limit, rate_mbps, ber, trace_cap):
    """Simulate one run; returns (stats, trace)."""
    stats = np.zeros(N_STATS, np.int64)
    trace = np.zeros((trace_cap, 4), np.int64)
    offsets, times = generate_arrivals(seed, n_nodes, pkt_rate, duration, slot_s)
    n_pkts = times.shape[0]
    stats[S_OFFERED] = n_pkts
    avail = np.empty(n_pkts, np.int64)
    for q in range(n_pkts):
        avail[q] = int(times[q] / slot_s) + 1
    status = np.zeros(n_pkts, np.int8)
    damaged = np.zeros(n_pkts, np.int8)

    occ = np.zeros(n_slots + OCC_MARGIN, np.int32)
    R = _tx_slots(RTS_BYTES, 6.0, slot_s)
    C = _tx_slots(CTS_BYTES, 6.0, slot_s)
    A = _tx_slots(ACK_BYTES, 6.0, slot_s)

    phase = np.zeros(n_nodes, np.int64)
    stage = np.zeros(n_nodes, np.int64)
    evt = np.full(n_nodes, -1, np.int64)
    bo = np.zeros(n_nodes, np.int64)
    cw = np.full(n_nodes, cw_min, np.int64)
    retry = np.zeros(n_nodes, np.int64)
    idle_run = np.full(n_nodes, DIFS_SLOTS, np.int64)
    nav_until = np.full(n_nodes, -1, np.int64)
    contend_since = np.zeros(n_nodes, np.int64)
    mac_ctr = np.zeros(n_nodes, np.int64)
    cur_pkt = offsets[:n_nodes].copy()
    cur_off = np.zeros(n_nodes, np.int64)
    has_frame = np.zeros(n_nodes, np.int64)
    f_pkt = np.zeros(n_nodes, np.int64)
    f_off = np.zeros(n_nodes, np.int64)
    e_pkt = np.zeros(n_nodes, np.int64)
    e_off = np.zeros(n_nodes, np.int64)
    f_bytes = np.zeros(n_nodes, np.int64)
    f_dur = np.zeros(n_nodes, np.int64)
    f_delivered = np.zeros(n_nodes, np.int64)
    tx_start = np.zeros(n_nodes, np.int64)
    ch_ctr = np.zeros(1, np.int64)
    use_backoff = policy != 0

    for t in range(n_slots):
        # (1) exchange events due now
        for i in range(n_nodes):
            if phase[i] != BUSY or evt[i] != t:
                continue
            st = stage[i]
            if st == JUDGE_RTS:
                if _received(occ, tx_start[i], R, RTS_BYTES, ber, seed, ch_ctr, stats):
                    cts_at = t + SIFS_SLOTS
                    _register(occ, n_slots, cts_at, C, stats, trace, i, K_CTS)
                    stats[S_CTRL_BITS] += CTS_BYTES * 8
                    end = cts_at + C + SIFS_SLOTS + f_dur[i] - 1
                    if ack:
                        end += SIFS_SLOTS + A
                    for j in range(n_nodes):
                        if j != i and nav_until[j] < end:
                            nav_until[j] = end
                    _trace(trace, stats, t, end - t + 1, i, K_NAV)
                    tx_start[i] = cts_at
                    stage[i] = JUDGE_CTS
                    evt[i] = cts_at + C
                else:
                    stage[i] = FAIL
                    evt[i] = t + SIFS_SLOTS + C + 1
                continue
            if st == JUDGE_CTS:
                if _received(occ, tx_start[i], C, CTS_BYTES, ber, seed, ch_ctr, stats):
                    ds = t + SIFS_SLOTS
                    _register(occ, n_slots, ds, f_dur[i], stats, trace, i, K_DATA)
                    stats[S_DATA_FRAMES] += 1
                    tx_start[i] = ds
                    stage[i] = JUDGE_DATA
                    evt[i] = ds + f_dur[i]
                else:
                    stage[i] = FAIL
                    evt[i] = t + 1
                continue
            if st == JUDGE_DATA:
                ok = _received(occ, tx_start[i], f_dur[i], f_bytes[i] + MAC_HEADER_BYTES, ber,
                               seed, ch_ctr, stats)
                if ok and f_delivered[i] == 0:
                    f_delivered[i] = 1
                    _resolve_delivered(i, f_pkt, e_pkt, status, damaged, stats)
                if ack:
                    if ok:
                        ack_at = t + SIFS_SLOTS
                        _register(occ, n_slots, ack_at, A, stats, trace, i, K_ACK)
                        stats[S_CTRL_BITS] += ACK_BYTES * 8
                        if not rts:
                            end = ack_at + A - 1
                            for j in range(n_nodes):
                                if j != i and nav_until[j] < end:
                                    nav_until[j] = end
                        tx_start[i] = ack_at
                        stage[i] = JUDGE_ACK
                        evt[i] = ack_at + A
                    else:
                        stage[i] = FAIL
                        evt[i] = t + SIFS_SLOTS + A + 1
                    continue
                if not ok:
                    _resolve_lost(i, f_pkt, e_pkt, e_off, cur_pkt, cur_off, False, status,
                                  damaged, stats)
                # sender assumes success without ACK
                if use_backoff:
                    cw[i] = backoff_next_cw(policy, cw[i], SUCCESS, cw_min)
                retry[i] = 0
                has_frame[i] = 0
                phase[i] = IDLE
                continue
            if st == JUDGE_ACK:
                if _received(occ, tx_start[i], A, ACK_BYTES, ber, seed, ch_ctr, stats):
                    if use_backoff:
                        cw[i] = backoff_next_cw(policy, cw[i], SUCCESS, cw_min)
                    retry[i] = 0
                    has_frame[i] = 0
                    phase[i] = IDLE
                else:
                    stage[i] = FAIL
                    evt[i] = t + 1
                continue
            # FAIL: timeout expired
            retry[i] += 1
            stats[S_RETRIES] += 1
            if retry[i] > RETRY_LIMIT:
                if f_delivered[i] == 0:
                    _resolve_lost(i, f_pkt, e_pkt, e_off, cur_pkt, cur_off, True, status,
                                  damaged, stats)
                has_frame[i] = 0
                retry[i] = 0
                cw[i] = cw_min
                phase[i] = IDLE
            else:
                if use_backoff:
                    cw[i] = backoff_next_cw(policy, cw[i], FAILURE, cw_min)
                    bo[i] = int(uniform(seed, 2 * i + 1, mac_ctr[i]) * (cw[i] + 1))
                    mac_ctr[i] += 1
                else:
                    bo[i] = 0
                contend_since[i] = t
                phase[i] = CONTEND

        # (2) sense the previous slot
        busy_prev = t > 0 and occ[t - 1] > 0
        for i in range(n_nodes):
            if busy_prev or (cs and nav_until[i] >= t):
                idle_run[i] = 0
            else:
                idle_run[i] += 1

        # (3) contention and new transmissions
        for i in range(n_nodes):
            if phase[i] == IDLE:
                q = cur_pkt[i]
                if q < offsets[i + 1] and avail[q] <= t:
                    phase[i] = CONTEND
                    contend_since[i] = t
                    if use_backoff:
                        bo[i] = int(uniform(seed, 2 * i + 1, mac_ctr[i]) * (cw[i] + 1))
                        mac_ctr[i] += 1
                    else:
                        bo[i] = 0
                else:
                    continue
            if phase[i] != CONTEND:
                continue
            go = False
            if cs:
                if idle_run[i] > DIFS_SLOTS and bo[i] > 0 and contend_since[i] < t:
                    bo[i] -= 1
                go = idle_run[i] >= DIFS_SLOTS and bo[i] == 0
            else:
                if bo[i] == 0:
                    go = True
                else:
                    bo[i] -= 1
            if not go:
                continue
            if has_frame[i] == 0:
                # build the next frame from the byte cursor
                q = cur_pkt[i]
                o = cur_off[i]
                f_pkt[i] = q
                f_off[i] = o
                if o > 0 or pkt_bytes > payload_limit:
                    nb = min(pkt_bytes - o, payload_limit)
                    if o + nb == pkt_bytes:
                        e_pkt[i] = q + 1
                        e_off[i] = 0
                    else:
                        e_pkt[i] = q
                        e_off[i] = o + nb
                else:
                    k = 0
                    kmax = payload_limit // pkt_bytes
                    while k < kmax and q + k < offsets[i + 1] and avail[q + k] <= t:
                        k += 1
                    nb = k * pkt_bytes
                    e_pkt[i] = q + k
                    e_off[i] = 0
                f_bytes[i] = nb
                f_dur[i] = _tx_slots(nb + MAC_HEADER_BYTES, float(rate_mbps), slot_s)
                cur_pkt[i] = e_pkt[i]
                cur_off[i] = e_off[i]
                has_frame[i] = 1
                f_delivered[i] = 0
            stats[S_ATTEMPTS] += 1
            phase[i] = BUSY
            tx_start[i] = t
            if rts:
                _register(occ, n_slots, t, R, stats, trace, i, K_RTS)
                stats[S_CTRL_BITS] += RTS_BYTES * 8
                stage[i] = JUDGE_RTS
                evt[i] = t + R
            else:
                _register(occ, n_slots, t, f_dur[i], stats, trace, i, K_DATA)
                stats[S_DATA_FRAMES] += 1
                stage[i] = JUDGE_DATA
                evt[i] = t + f_dur[i]

    # end-of-run accounting
    for i in range(n_nodes):
        boundary = cur_pkt[i] + (1 if cur_off[i] > 0 else 0)
        for q in range(offsets[i], offsets[i + 1]):
            if status[q] != 0:
                continue
            if q < boundary:
                stats[S_INFLIGHT] += 1
            else:
                stats[S_QUEUED] += 1
    return stats, trace[:stats[S_TRACE_LEN]]

"""The eight acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line that is printed in the terminal
summary. Failing criteria fail here on purpose; their analysis lives in the
decisions ledger kept outside the package.
"""
import itertools
import math
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from macsynth.agents import (AgentConfig, Mlp, QTable, gradient_check, q_update,
                             select_action)
from macsynth.blocks import (ALOHA_CATALOG, DCF_GENOME, DOMAIN_SIZES, BlockId, Genome,
                             enumerate_genomes, parse_genome)
from macsynth.harness import (aloha_comparison, convergence_experiment, dcf_comparison,
                              episodes_to_threshold, exhaustive_sweep, mean_uplift)
from macsynth.logic import RuleTable, is_valid
from macsynth.sim import Scenario, run, run_pure_aloha


def record(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n} ({title}): {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


# ---------------------------------------------------------------- 1

def test_criterion_1_genome_space():
    t0 = time.perf_counter()
    every = list(enumerate_genomes())
    # independent count: a plain product of the option domains, then R1 by hand
    product = list(itertools.product(*[range(n) for n in DOMAIN_SIZES]))
    oracle_valid = sum(s[BlockId.BACKOFF] == 0 or s[BlockId.ACK] == 1 for s in product)
    r1 = RuleTable.parse("R1")
    valid = sum(is_valid(g, r1) for g in every)
    elapsed = time.perf_counter() - t0
    ok = (len(every) == len(product) == 9408 and valid == oracle_valid == 6272
          and elapsed < 1.0)
    record(1, "genome space", ok,
           f"{len(every)} genomes, {valid} valid under R1 (oracle {oracle_valid}), "
           f"{elapsed:.2f} s")


# ---------------------------------------------------------------- 2

CHAIN_R = (0.0, 0.1, 0.2, 0.3, 1.0)


def chain_step(s, a):
    return s if a == 0 else max(s - 1, 0) if a == 1 else min(s + 1, 4)


def chain_value_iteration(gamma):
    V = np.zeros(5)
    for _ in range(500):
        V = np.array([max(CHAIN_R[chain_step(s, a)] + gamma * V[chain_step(s, a)]
                          for a in range(3)) for s in range(5)])
    return np.array([[CHAIN_R[chain_step(s, a)] + gamma * V[chain_step(s, a)]
                      for a in range(3)] for s in range(5)])


def test_criterion_2_q_learning_oracle():
    t0 = time.perf_counter()
    cfg = AgentConfig(alpha=1.0, gamma=0.8, epsilon=0.5)
    q = QTable(3)
    rng = np.random.default_rng(0)
    exact = True
    s = 0
    for _ in range(4000):
        a = select_action(q, s, [0, 1, 2], cfg.epsilon, rng)
        nxt = chain_step(s, a)
        target = CHAIN_R[nxt] + cfg.gamma * max(q.get(nxt, b) for b in range(3))
        exact &= q_update(q, s, a, CHAIN_R[nxt], nxt, [0, 1, 2], cfg) == target
        s = nxt if rng.random() > 0.1 else int(rng.integers(5))
    learned = np.array([[q.get(s, a) for a in range(3)] for s in range(5)])
    err = float(np.max(np.abs(learned - chain_value_iteration(cfg.gamma))))
    elapsed = time.perf_counter() - t0
    record(2, "Q-learning oracle", err < 1e-6 and exact and elapsed < 1.0,
           f"max |Q - VI| = {err:.2e}, alpha=1 updates exact: {exact}, {elapsed:.2f} s")


# ---------------------------------------------------------------- 3

def test_criterion_3_dqn_gradient_check():
    t0 = time.perf_counter()
    errors = []
    for seed in range(10):
        mlp = Mlp.init((23, 8, 8, 8, 22), seed=seed)
        rng = np.random.default_rng(seed + 1_000_003)
        errors.append(gradient_check(mlp, rng.normal(size=23), rng.normal(size=22)))
    elapsed = time.perf_counter() - t0
    worst = max(errors)
    record(3, "DQN gradient check", worst < 1e-4 and elapsed < 10.0,
           f"max relative error {worst:.2e} over 10 seeds, {elapsed:.2f} s")


# ---------------------------------------------------------------- 4

def textbook_aloha(G, seed):
    sc = Scenario(num_nodes=50, per_node_load=G * 10e6 / 50, duration=5.0, seed=seed)
    return run_pure_aloha(sc, ack=False, rate_mbps=10, header_bytes=0,
                          preamble_slots=0).normalized_throughput


def test_criterion_4_aloha_analytic():
    t0 = time.perf_counter()
    grid = (0.1, 0.3, 0.5, 0.7, 1.0)
    sim = {G: float(np.mean([textbook_aloha(G, s) for s in range(3)])) for G in grid}
    deviations = {G: abs(sim[G] - G * math.exp(-2 * G)) for G in (0.1, 0.5, 1.0)}
    peak = max(sim.values())
    elapsed = time.perf_counter() - t0
    ok = (max(deviations.values()) <= 0.02 and abs(peak - 1 / (2 * math.e)) <= 0.02
          and elapsed < 30.0)
    record(4, "ALOHA analytic", ok,
           "S(G) " + ", ".join(f"G={G}: {sim[G]:.4f}" for G in (0.1, 0.5, 1.0))
           + f"; max deviation {max(deviations.values()):.4f}; peak {peak:.4f} vs 0.184;"
           f" {elapsed:.1f} s")


# ---------------------------------------------------------------- 5

def test_criterion_5_convergence_shape():
    cfg = AgentConfig()
    episodes = 60
    s1 = Scenario.preset(1)
    other = Scenario.preset(6)
    sweep1 = exhaustive_sweep(s1.replace(duration=cfg.sim_seconds_per_step), 3, ALOHA_CATALOG)
    sweep6 = exhaustive_sweep(other.replace(duration=cfg.sim_seconds_per_step), 3, ALOHA_CATALOG)
    kw = dict(episodes=episodes, seeds=range(10), catalog=ALOHA_CATALOG, cfg=cfg)
    cold = convergence_experiment(s1, sweep=sweep1, **kw)
    same = convergence_experiment(s1, warm_from=s1, sweep=sweep1, warm_sweep=sweep1, **kw)
    diff = convergence_experiment(s1, warm_from=other, sweep=sweep1, warm_sweep=sweep6, **kw)

    def eps(res):
        e = episodes_to_threshold(res.mean[:50], 80)
        return episodes + 1 if e is None else e

    by_50 = float(cold.mean[:50].max())
    ok = (eps(cold) <= 50 and eps(same) <= eps(cold) <= eps(diff)
          and sweep1.goal != sweep6.goal)
    record(5, "convergence shape", ok,
           f"cold best mean visits by ep 50 = {by_50:.1f} (need 80); episodes to 80"
           f" (never = {episodes + 1}): cold {eps(cold)}, warm-same {eps(same)},"
           f" warm-from-scenario6 {eps(diff)}")


# ---------------------------------------------------------------- 6

def test_criterion_6_baseline_orderings():
    seeds = (0, 1, 2)
    aloha = aloha_comparison(seeds)
    low = dcf_comparison("low", seeds)
    high = dcf_comparison("high", seeds)
    aloha_ok = all(r.deepmac >= r.baseline for r in aloha)
    low_ok = all(r.deepmac >= r.baseline for r in low)
    high_ok = all(r.deepmac >= r.baseline for r in high)
    losing = [r.label for r in aloha if r.deepmac < r.baseline]
    record(6, "baseline orderings", aloha_ok and low_ok and high_ok,
           f"ALOHA beaten on {8 - len(losing)}/8 scenarios (not: {losing});"
           f" DCF low ramp all >= {low_ok}, uplift {100 * mean_uplift(low):+.1f}% (reference ~6%);"
           f" DCF high ramp all >= {high_ok}, uplift {100 * mean_uplift(high):+.1f}%"
           " (reference ~2%)")


# ---------------------------------------------------------------- 7

def best_rank(sweep, predicate):
    return next(i for i, (g, _) in enumerate(sweep.ranking) if predicate(g))


def test_criterion_7_block_directionality():
    dur = AgentConfig().sim_seconds_per_step
    low = exhaustive_sweep(Scenario.preset(1, duration=dur), 3)
    sat7 = exhaustive_sweep(Scenario.preset(7, duration=dur), 2)
    sat8 = exhaustive_sweep(Scenario.preset(8, duration=dur), 2)
    noisy = exhaustive_sweep(Scenario.preset(6, duration=dur), 2)

    no_ack = best_rank(low, lambda g: not g.ack)
    ack7 = best_rank(sat7, lambda g: g.ack)
    ack8 = best_rank(sat8, lambda g: g.ack)

    # fragmentation: a genome in the top 5 with a limit below 1500 B that beats
    # its twin with fragmentation off
    frag_block = BlockId.FRAGMENTATION
    frag_wins = []
    for g in noisy.top(5):
        if g[frag_block] != 0:
            twin = Genome(tuple(0 if b == frag_block else v for b, v in zip(BlockId, g.settings)))
            if is_valid(twin) and noisy.rank_of(twin) > noisy.rank_of(g):
                frag_wins.append(g)

    ok = no_ack < 5 and ack7 < 5 and ack8 < 5 and bool(frag_wins)
    record(7, "block-selection directionality", ok,
           f"scenario1 best no-ACK rank {no_ack + 1} (need <= 5);"
           f" scenario7 best ACK rank {ack7 + 1}; scenario8 best ACK rank {ack8 + 1};"
           f" scenario6 top-5 fragmenting genomes beating their unfragmented twin:"
           f" {len(frag_wins)}")


# ---------------------------------------------------------------- 8

MATRIX_GENOMES = [DCF_GENOME, ALOHA_CATALOG.base, parse_genome("off,noack,off,2000,off,31,off,54"),
                  parse_genome("EIED,ACK,1000,off,RTS,63,CS,24")]


def conserved(r):
    return r.offered_bits == (r.delivered_payload_bits + r.dropped_bits + r.queued_bits
                              + r.in_flight_bits)


def test_criterion_8_determinism_and_conservation():
    runs = identical = balanced = 0
    for n in range(1, 9):
        for seed in (0, 11):
            sc = Scenario.preset(n, duration=0.5, seed=seed)
            pairs = [(run(g, sc), run(g, sc)) for g in MATRIX_GENOMES]
            pairs.append((run_pure_aloha(sc), run_pure_aloha(sc)))
            for a, b in pairs:
                runs += 1
                identical += a.to_csv_row().encode() == b.to_csv_row().encode()
                balanced += conserved(a) and conserved(b)
    record(8, "determinism and conservation", identical == runs == balanced,
           f"{identical}/{runs} byte-identical CSV rows, {balanced}/{runs} runs conserve bits")

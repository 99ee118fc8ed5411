import datetime as dt
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from macsynth.agents import AgentConfig
from macsynth.blocks import ALOHA_CATALOG, BlockId, Catalog, Genome, encode, enumerate_genomes
from macsynth.harness import (ComparisonRow, ExperimentKind, ExperimentSpec, Ramp,
                              aloha_comparison, block_selection_report, convergence_experiment,
                              dcf_comparison, episodes_to_threshold, exhaustive_sweep,
                              mean_uplift, rank, reward_energy_weighted, reward_throughput,
                              rows_to_csv, sweep_seeds, trained_genome, write_outputs)
from macsynth.logic import DEFAULT_RULES, is_valid
from macsynth.sim import Scenario, SimResult, run

from strategies import genomes

TINY = Catalog.parse("ack,cs")


def result(delivered=0, energy=0, offered=0, duration=1.0, capacity=10e6):
    return SimResult(delivered, delivered / duration, delivered / duration / capacity,
                     0, 0, 0, 0, 0, energy, offered, 0, 0, offered - delivered, duration)


# ---------------------------------------------------------------- rewards

def test_reward_throughput_examples():
    assert reward_throughput(SimResult.empty(1.0)) == 0.0
    assert reward_throughput(result(delivered=5_000_000, offered=5_000_000)) == 0.5


def test_reward_throughput_monotone_in_delivered_bits():
    vals = [reward_throughput(result(delivered=d, offered=10**7)) for d in (0, 10, 10**4, 10**6)]
    assert vals == sorted(vals) and len(set(vals)) == 4


def test_energy_weighted_reward_examples():
    r = result(delivered=600, energy=50, offered=1000)
    assert reward_energy_weighted(r, 1.0, 0.0) == pytest.approx(0.6)
    assert reward_energy_weighted(r, 0.0, 0.0) == 0.0
    assert reward_energy_weighted(r, 2.0, 3.0) == pytest.approx(1.2 - 3.0 * 50 / 600)
    assert reward_energy_weighted(result(delivered=0, energy=20, offered=100), 1.0, 0.5) < 0
    with pytest.raises(ValueError):
        reward_energy_weighted(r, -1.0, 0.0)


# ---------------------------------------------------------------- sweep

@pytest.fixture(scope="module")
def tiny_sweep():
    return exhaustive_sweep(Scenario.preset(1, duration=0.5), k_seeds=2, catalog=TINY)


def test_tiny_sweep_matches_manual_runs(tiny_sweep):
    sc = Scenario.preset(1, duration=0.5)
    assert len(tiny_sweep.ranking) == 4
    for g, v in tiny_sweep.ranking:
        manual = [run(g, sc.replace(seed=s)).normalized_throughput for s in (0, 1)]
        assert v == sum(manual) / 2


def test_sweep_ranking_order_and_accessors(tiny_sweep):
    values = [v for _, v in tiny_sweep.ranking]
    assert values == sorted(values, reverse=True)
    assert tiny_sweep.goal == tiny_sweep.ranking[0][0]
    assert tiny_sweep.best_value == values[0]
    assert tiny_sweep.rank_of(tiny_sweep.goal) == 0
    assert tiny_sweep.top(2) == [g for g, _ in tiny_sweep.ranking[:2]]
    lines = tiny_sweep.to_csv().splitlines()
    assert lines[0] == "rank,genome,mean_normalized_throughput" and len(lines) == 5
    with pytest.raises(KeyError):
        tiny_sweep.rank_of(Genome((2, 1, 1, 1, 1, 1, 1, 1)))


def test_sweep_is_reproducible(tiny_sweep):
    again = exhaustive_sweep(Scenario.preset(1, duration=0.5), k_seeds=2, catalog=TINY)
    assert again.to_csv() == tiny_sweep.to_csv()


def test_sweep_on_restricted_catalog_counts_valid_genomes():
    sc = Scenario.preset(1, duration=0.05)
    res = exhaustive_sweep(sc, k_seeds=1, catalog=ALOHA_CATALOG)
    expected = sum(is_valid(g, DEFAULT_RULES) for g in enumerate_genomes(ALOHA_CATALOG))
    assert len(res.ranking) == expected == len({g for g, _ in res.ranking})


def test_sweep_seeds_follow_scenario_seed():
    assert sweep_seeds(Scenario.preset(2, seed=5), 3) == (5, 6, 7)
    with pytest.raises(ValueError):
        sweep_seeds(Scenario.preset(2), 0)


@given(st.dictionaries(genomes, st.sampled_from([0.0, 0.25, 0.5]), min_size=1, max_size=12))
def test_rank_is_a_total_order_with_encoding_tiebreak(values):
    ranked = rank(values)
    assert len(ranked) == len(values)
    keys = [(-v, tuple(encode(g))) for g, v in ranked]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    assert rank(dict(reversed(list(values.items())))) == ranked


# ---------------------------------------------------------------- outputs

def test_experiment_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(ExperimentKind.SWEEP, repetitions=0)
    with pytest.raises(ValueError):
        ExperimentSpec(ExperimentKind.SWEEP, seeds=(1, 1))


def test_write_outputs_creates_manifest_and_tables(tmp_path):
    spec = ExperimentSpec(ExperimentKind.SWEEP, seeds=(3, 4), output=tmp_path)
    now = dt.datetime(2024, 5, 6, 7, 8, 9)
    out = write_outputs(spec, {"ranking": "rank,genome\n1,x\n"}, now)
    assert out.name == "sweep-20240506-070809"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["spec"]["seeds"] == [3, 4]
    assert manifest["tables"] == ["ranking"]
    assert set(manifest["versions"]) >= {"macsynth", "numpy", "numba", "python"}
    assert (out / "ranking.csv").read_text() == "rank,genome\n1,x\n"
    # a second run in the same second gets its own directory
    assert write_outputs(spec, {}, now) != out


# ---------------------------------------------------------------- experiments

def test_episodes_to_threshold():
    assert episodes_to_threshold([10, 50, 80, 90], 80) == 3
    assert episodes_to_threshold([10, 50], 80) is None


def test_convergence_experiment_shape_and_reproducibility():
    cfg = AgentConfig(steps_per_episode=20)
    kw = dict(episodes=4, seeds=range(3), catalog=TINY, cfg=cfg, k_seeds=1)
    res = convergence_experiment(Scenario.preset(1), **kw)
    assert res.per_seed.shape == (3, 4)
    assert ((res.per_seed >= 0) & (res.per_seed <= 20)).all()
    lines = res.to_csv().splitlines()
    assert lines[0] == "episode,mean_goal_visits,seed0,seed1,seed2" and len(lines) == 5
    again = convergence_experiment(Scenario.preset(1), **kw)
    assert again.to_csv() == res.to_csv()


def test_warm_started_convergence_runs():
    cfg = AgentConfig(steps_per_episode=20)
    res = convergence_experiment(Scenario.preset(1), warm_from=Scenario.preset(3), episodes=3,
                                 seeds=range(2), catalog=TINY, cfg=cfg, k_seeds=1)
    assert res.warm_from == Scenario.preset(3)
    assert res.per_seed.shape == (2, 3)


def test_comparison_row_uplift_and_csv():
    g = Genome((0,) * 8)
    rows = [ComparisonRow("a", 1, g, 0.3, 0.2), ComparisonRow("a", 2, g, 0.1, 0.2, time_s=3.0)]
    assert rows[0].uplift == pytest.approx(0.5)
    assert ComparisonRow("a", 1, g, 0.1, 0.0).uplift == float("inf")
    assert mean_uplift(rows) == pytest.approx(0.0)
    text = rows_to_csv(rows, "dcf")
    assert text.splitlines()[0] == "label,time_s,nodes,genome,deepmac,dcf"
    assert len(text.splitlines()) == 3


def test_aloha_comparison_rows_use_restricted_catalog():
    cfg = AgentConfig(steps_per_episode=10, sim_seconds_per_step=0.2)
    rows = aloha_comparison(seeds=(0,), scenarios=(1, 2), cfg=cfg, episodes=1)
    assert [r.nodes for r in rows] == [5, 5]
    for r in rows:
        assert ALOHA_CATALOG.contains(r.genome)
        assert 0.0 <= r.deepmac <= 1.0 and 0.0 <= r.baseline <= 1.0


def test_dcf_comparison_walks_the_ramp():
    cfg = AgentConfig(steps_per_episode=10, sim_seconds_per_step=0.2)
    ramp = Ramp("tiny", 1, 3, 0.25, "low")
    rows = dcf_comparison(ramp, seeds=(0,), cfg=cfg, episodes=1, catalog=TINY)
    assert [r.nodes for r in rows] == [1, 2, 3]
    assert [r.time_s for r in rows] == [0.0, 0.25, 0.5]
    assert all(r.label == "tiny" for r in rows)


def test_block_report_shape():
    cfg = AgentConfig(steps_per_episode=5, sim_seconds_per_step=0.1)
    report = block_selection_report(range(1, 9), repetitions=2, cfg=cfg, episodes=1,
                                    catalog=TINY, eval_seeds=(0,))
    table = report.table_csv().splitlines()
    assert len(table) == 9 and all(len(line.split(",")) == 9 for line in table)
    freq = report.frequencies_csv().splitlines()
    name = Scenario.preset(1).name
    for b in BlockId:
        total = sum(report.frequency(name, b, o) for o in report.counts[name][b])
        assert total == pytest.approx(1.0)
    assert freq[0] == "scenario,block,option,frequency"
    # blocks outside the catalog keep their base option
    assert report.frequency(name, BlockId.DATA_RATE, TINY.base[BlockId.DATA_RATE]) == 1.0
    with pytest.raises(ValueError):
        block_selection_report(repetitions=0)


@pytest.mark.xfail(strict=True, reason="stay-action attractor; see the decisions ledger")
def test_trained_genome_within_two_percent_of_sweep_optimum():
    sc = Scenario.preset(1)
    cfg = AgentConfig()
    sweep = exhaustive_sweep(sc.replace(duration=cfg.sim_seconds_per_step), 3, ALOHA_CATALOG)
    g = trained_genome(sc, ALOHA_CATALOG, cfg=cfg, episodes=60, seed=0, eval_seeds=sweep.seeds)
    assert sweep.rewards()[g] >= 0.98 * sweep.best_value

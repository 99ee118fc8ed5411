"""Learning experiments: convergence curves, baseline comparisons and block reports."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..agents import AgentConfig, ProtocolEnv, QTable, greedy_rollout, run_episode, warm_start
from ..blocks import (ALOHA_CATALOG, DCF_GENOME, FULL_CATALOG, OPTION_NAMES, BlockId, Catalog,
                      Genome)
from ..logic import DEFAULT_RULES, RuleTable
from ..sim import LOAD_BPS, Scenario, run, run_pure_aloha
from .sweep import SweepResult, exhaustive_sweep

CONVERGENCE_THRESHOLD = 80
DEFAULT_EPISODES = 60


def make_env(sweep: SweepResult, catalog: Catalog, rules: RuleTable,
             cfg: AgentConfig) -> ProtocolEnv:
    """Environment whose rewards agree with ``sweep`` (same seeds, preloaded values)."""
    env = ProtocolEnv(sweep.scenario, catalog, rules, sweep.seeds,
                      sim_seconds=cfg.sim_seconds_per_step)
    if sweep.scenario.duration == cfg.sim_seconds_per_step:
        env.preload(sweep.rewards())
    return env


def train(env: ProtocolEnv, goal: Genome, cfg: AgentConfig, episodes: int, seed: int,
          q: QTable | None = None, start: Genome | None = None) -> tuple[QTable, list[int]]:
    """Train a tabular agent; the walk continues from one episode into the next.

    The first episode starts at ``start`` (the catalog base genome by default).
    Returns the table and the goal visits of each episode.
    """
    rng = np.random.default_rng(seed)
    q = QTable(env.n_actions) if q is None else q
    env.reset(env.catalog.base if start is None else start)
    visits = []
    for _ in range(episodes):
        visits.append(run_episode(env, q, cfg, goal, rng).goal_visits)
    return q, visits


def episodes_to_threshold(series: Sequence[float], threshold: float) -> int | None:
    """One-based index of the first episode reaching ``threshold``; None if never."""
    for i, v in enumerate(series):
        if v >= threshold:
            return i + 1
    return None


@dataclass
class ConvergenceResult:
    scenario: Scenario
    goal: Genome
    per_seed: np.ndarray
    threshold: float
    warm_from: Scenario | None = None

    @property
    def mean(self) -> np.ndarray:
        return self.per_seed.mean(axis=0)

    @property
    def episodes_to_threshold(self) -> int | None:
        return episodes_to_threshold(self.mean, self.threshold)

    def to_csv(self) -> str:
        lines = ["episode,mean_goal_visits," + ",".join(f"seed{i}" for i in
                                                       range(self.per_seed.shape[0]))]
        for e in range(self.per_seed.shape[1]):
            cells = [str(e + 1), repr(float(self.mean[e]))]
            cells += [str(int(v)) for v in self.per_seed[:, e]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def convergence_experiment(scenario: Scenario, warm_from: Scenario | None = None,
                           episodes: int = DEFAULT_EPISODES, seeds: Sequence[int] = range(10),
                           catalog: Catalog = ALOHA_CATALOG, rules: RuleTable = DEFAULT_RULES,
                           cfg: AgentConfig = AgentConfig(), k_seeds: int = 3,
                           threshold: float = CONVERGENCE_THRESHOLD,
                           sweep: SweepResult | None = None,
                           warm_sweep: SweepResult | None = None) -> ConvergenceResult:
    """Goal visits per episode for fresh or warm-started agents, one row per seed.

    With ``warm_from`` each seed first trains ``episodes`` episodes on that
    scenario (towards its own sweep optimum) and the copied table then
    learns on ``scenario``.
    """
    sim = scenario.replace(duration=cfg.sim_seconds_per_step)
    sweep = sweep or exhaustive_sweep(sim, k_seeds, catalog, rules)
    env = make_env(sweep, catalog, rules, cfg)
    src_env = None
    if warm_from is not None:
        src_sim = warm_from.replace(duration=cfg.sim_seconds_per_step)
        warm_sweep = warm_sweep or exhaustive_sweep(src_sim, k_seeds, catalog, rules)
        src_env = make_env(warm_sweep, catalog, rules, cfg)
    rows = []
    for s in seeds:
        q = None
        if src_env is not None:
            # pretraining uses a seed disjoint from the evaluation run
            src_q, _ = train(src_env, warm_sweep.goal, cfg, episodes, seed=10_000 + s)
            q = warm_start(src_q, env.n_actions)
        _, visits = train(env, sweep.goal, cfg, episodes, seed=s, q=q)
        rows.append(visits)
    return ConvergenceResult(scenario, sweep.goal, np.array(rows, dtype=float), threshold,
                             warm_from)


def trained_genome(scenario: Scenario, catalog: Catalog = FULL_CATALOG,
                   rules: RuleTable = DEFAULT_RULES, cfg: AgentConfig = AgentConfig(),
                   episodes: int = DEFAULT_EPISODES, seed: int = 0,
                   eval_seeds: Sequence[int] = (0, 1, 2),
                   env: ProtocolEnv | None = None) -> Genome:
    """Train one agent on ``scenario`` and read out its protocol by a greedy rollout.

    Without a sweep there is no goal, so goal visits are not tracked here.
    """
    env = env or ProtocolEnv(scenario, catalog, rules, eval_seeds,
                             sim_seconds=cfg.sim_seconds_per_step)
    q, _ = train(env, catalog.base, cfg, episodes, seed)
    return greedy_rollout(env, q, catalog.base, cfg.steps_per_episode)


def mean_throughput(genome_or_none: Genome | None, scenario: Scenario, seeds: Sequence[int],
                    rules: RuleTable = DEFAULT_RULES) -> float:
    """Seed-averaged normalized throughput; ``None`` selects pure ALOHA."""
    vals = []
    for s in seeds:
        sc = scenario.replace(seed=s)
        r = run_pure_aloha(sc) if genome_or_none is None else run(genome_or_none, sc, rules)
        vals.append(r.normalized_throughput)
    return float(np.mean(vals))


@dataclass
class ComparisonRow:
    label: str
    nodes: int
    genome: Genome
    deepmac: float
    baseline: float
    time_s: float = 0.0

    @property
    def uplift(self) -> float:
        return self.deepmac / self.baseline - 1.0 if self.baseline > 0 else float("inf")


def rows_to_csv(rows: Sequence[ComparisonRow], baseline_name: str) -> str:
    lines = [f"label,time_s,nodes,genome,deepmac,{baseline_name}"]
    for r in rows:
        lines.append(f'{r.label},{r.time_s!r},{r.nodes},"{r.genome}",{r.deepmac!r},{r.baseline!r}')
    return "\n".join(lines) + "\n"


def aloha_comparison(seeds: Sequence[int] = (0, 1, 2), scenarios: Sequence[int] = range(1, 9),
                     cfg: AgentConfig = AgentConfig(), episodes: int = DEFAULT_EPISODES,
                     train_seed: int = 0, rules: RuleTable = DEFAULT_RULES) -> list[ComparisonRow]:
    """Restricted-catalog agent versus pure ALOHA on each preset scenario."""
    rows = []
    for n in scenarios:
        sc = Scenario.preset(n)
        g = trained_genome(sc, ALOHA_CATALOG, rules, cfg, episodes, train_seed, seeds)
        rows.append(ComparisonRow(sc.name, sc.num_nodes, g, mean_throughput(g, sc, seeds, rules),
                                  mean_throughput(None, sc, seeds)))
    return rows


@dataclass(frozen=True)
class Ramp:
    name: str
    first: int
    last: int
    join_interval: float
    load: str


RAMPS = {
    "low": Ramp("low", 1, 15, 3.0, "low"),
    "high": Ramp("high", 25, 50, 2.0, "high"),
}


def dcf_comparison(ramp: str | Ramp, seeds: Sequence[int] = (0, 1, 2),
                   cfg: AgentConfig = AgentConfig(), episodes: int = DEFAULT_EPISODES,
                   train_seed: int = 0, catalog: Catalog = FULL_CATALOG,
                   rules: RuleTable = DEFAULT_RULES) -> list[ComparisonRow]:
    """Trained agent versus the DCF genome while nodes join one at a time.

    Each node count is a stationary segment lasting one join interval. The
    agent is trained separately for every node count before its segment.
    """
    ramp = RAMPS[ramp] if isinstance(ramp, str) else ramp
    rows = []
    for k, n in enumerate(range(ramp.first, ramp.last + 1)):
        base = Scenario(num_nodes=n, per_node_load=LOAD_BPS[ramp.load], ber=0.0,
                        name=f"{ramp.name}-ramp-{n}")
        g = trained_genome(base, catalog, rules, cfg, episodes, train_seed, seeds)
        seg = base.replace(duration=ramp.join_interval)
        rows.append(ComparisonRow(ramp.name, n, g, mean_throughput(g, seg, seeds, rules),
                                  mean_throughput(DCF_GENOME, seg, seeds, rules),
                                  time_s=k * ramp.join_interval))
    return rows


def mean_uplift(rows: Sequence[ComparisonRow]) -> float:
    """Relative gain of the agent's mean throughput over the baseline's."""
    d = np.mean([r.deepmac for r in rows])
    b = np.mean([r.baseline for r in rows])
    return float(d / b - 1.0)


@dataclass
class BlockReport:
    repetitions: int
    counts: dict[str, dict[BlockId, Counter]] = field(default_factory=dict)

    def modal(self, scenario: str, block: BlockId) -> str:
        return OPTION_NAMES[block][self.counts[scenario][block].most_common(1)[0][0]]

    def frequency(self, scenario: str, block: BlockId, option: int) -> float:
        return self.counts[scenario][block][option] / self.repetitions

    def table_csv(self) -> str:
        """One row per scenario; each cell is the modal option and its frequency."""
        lines = ["scenario," + ",".join(b.label for b in BlockId)]
        for sc, per_block in self.counts.items():
            cells = []
            for b in BlockId:
                opt, c = per_block[b].most_common(1)[0]
                cells.append(f"{OPTION_NAMES[b][opt]}:{c / self.repetitions:.2f}")
            lines.append(sc + "," + ",".join(cells))
        return "\n".join(lines) + "\n"

    def frequencies_csv(self) -> str:
        lines = ["scenario,block,option,frequency"]
        for sc, per_block in self.counts.items():
            for b in BlockId:
                for opt, name in enumerate(OPTION_NAMES[b]):
                    lines.append(f"{sc},{b.label},{name},{self.frequency(sc, b, opt)!r}")
        return "\n".join(lines) + "\n"


def block_selection_report(scenarios: Sequence[int] = range(1, 9), repetitions: int = 20,
                           cfg: AgentConfig = AgentConfig(), episodes: int = DEFAULT_EPISODES,
                           catalog: Catalog = FULL_CATALOG, rules: RuleTable = DEFAULT_RULES,
                           eval_seeds: Sequence[int] = (0, 1, 2)) -> BlockReport:
    """Option frequencies of the read-out genome over independent trainings."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    report = BlockReport(repetitions)
    for n in scenarios:
        sc = Scenario.preset(n)
        env = ProtocolEnv(sc, catalog, rules, eval_seeds, sim_seconds=cfg.sim_seconds_per_step)
        counts = {b: Counter() for b in BlockId}
        for rep in range(repetitions):
            g = trained_genome(sc, catalog, rules, cfg, episodes, rep, eval_seeds, env=env)
            for b in BlockId:
                counts[b][g[b]] += 1
        report.counts[sc.name] = counts
    return report

"""Exhaustive sweep: the ground-truth ranking of every valid genome."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from ..blocks import FULL_CATALOG, Catalog, Genome, encode, enumerate_genomes
from ..logic import DEFAULT_RULES, RuleTable, is_valid
from ..sim import Scenario, SimResult, run
from .rewards import reward_throughput


def sweep_seeds(scenario: Scenario, k_seeds: int) -> tuple[int, ...]:
    """The ``k_seeds`` consecutive seeds starting at the scenario's own seed."""
    if k_seeds < 1:
        raise ValueError("k_seeds must be at least 1")
    return tuple(scenario.seed + i for i in range(k_seeds))


def mean_reward(genome: Genome, scenario: Scenario, seeds: Sequence[int],
                rules: RuleTable = DEFAULT_RULES,
                reward_fn: Callable[[SimResult], float] = reward_throughput) -> float:
    vals = [reward_fn(run(genome, scenario.replace(seed=s), rules)) for s in seeds]
    return sum(vals) / len(vals)


def _chunk(args):
    genomes, scenario, seeds, rules = args
    return [(g, mean_reward(g, scenario, seeds, rules)) for g in genomes]


@dataclass(frozen=True)
class SweepResult:
    """Genomes ranked by mean normalized throughput, best first.

    Ties are broken by the integer encoding in ascending lexicographic order,
    which makes the ranking a total order.
    """

    scenario: Scenario
    seeds: tuple[int, ...]
    ranking: tuple[tuple[Genome, float], ...]

    @property
    def goal(self) -> Genome:
        return self.ranking[0][0]

    @property
    def best_value(self) -> float:
        return self.ranking[0][1]

    def rewards(self) -> dict[Genome, float]:
        return dict(self.ranking)

    def rank_of(self, genome: Genome) -> int:
        """Zero-based rank."""
        for i, (g, _) in enumerate(self.ranking):
            if g == genome:
                return i
        raise KeyError(f"{genome} is not in this sweep")

    def top(self, n: int) -> list[Genome]:
        return [g for g, _ in self.ranking[:n]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "genome", "mean_normalized_throughput"])
        for i, (g, v) in enumerate(self.ranking):
            w.writerow([i + 1, str(g), repr(v)])
        return buf.getvalue()


def rank(values: dict[Genome, float]) -> tuple[tuple[Genome, float], ...]:
    return tuple(sorted(values.items(), key=lambda gv: (-gv[1], encode(gv[0]))))


def exhaustive_sweep(scenario: Scenario, k_seeds: int = 3, catalog: Catalog = FULL_CATALOG,
                     rules: RuleTable = DEFAULT_RULES, jobs: int = 1) -> SweepResult:
    """Simulate every valid genome of ``catalog`` on ``k_seeds`` seeds and rank them."""
    seeds = sweep_seeds(scenario, k_seeds)
    genomes = [g for g in enumerate_genomes(catalog) if is_valid(g, rules)]
    if jobs <= 1:
        values = dict(_chunk((genomes, scenario, seeds, rules)))
    else:
        parts = [genomes[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(jobs) as ex:
            values = {}
            for res in ex.map(_chunk, [(p, scenario, seeds, rules) for p in parts]):
                values.update(res)
    return SweepResult(scenario, seeds, rank(values))

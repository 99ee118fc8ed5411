"""The protocol-design environment: states are genomes, actions mutate one block."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from ..blocks import FULL_CATALOG, Catalog, Genome, action_table, apply_action
from ..logic import DEFAULT_RULES, RuleTable, is_valid
from ..sim import Scenario, SimResult, run

RewardFn = Callable[[SimResult], float]


def _normalized(result: SimResult) -> float:
    return result.normalized_throughput


@dataclass
class StepResult:
    genome: Genome
    reward: float
    action: int


class ProtocolEnv:
    """Deterministic MDP over the valid genomes of a catalog.

    The reward of a genome is its mean reward over ``eval_seeds`` runs of
    ``scenario`` (with the duration set to ``sim_seconds``). Rewards are
    cached, so revisiting a genome costs nothing and the learner sees one
    fixed value per state.
    """

    def __init__(self, scenario: Scenario, catalog: Catalog = FULL_CATALOG,
                 rules: RuleTable = DEFAULT_RULES, eval_seeds: Sequence[int] = (0, 1, 2),
                 sim_seconds: float | None = None, reward_fn: RewardFn = _normalized,
                 rewards: Mapping[Genome, float] | None = None):
        if not eval_seeds:
            raise ValueError("eval_seeds must not be empty")
        if sim_seconds is not None:
            scenario = scenario.replace(duration=sim_seconds)
        self.scenario = scenario
        self.catalog = catalog
        self.rules = rules
        self.eval_seeds = tuple(eval_seeds)
        self.reward_fn = reward_fn
        self.actions = action_table(catalog)
        self._reward_cache: dict[Genome, float] = dict(rewards or {})
        self._valid_actions: dict[Genome, tuple[int, ...]] = {}
        self.genome: Genome | None = None
        self.evaluations = 0

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def reward(self, genome: Genome) -> float:
        cached = self._reward_cache.get(genome)
        if cached is None:
            vals = [self.reward_fn(run(genome, self.scenario.replace(seed=s), self.rules))
                    for s in self.eval_seeds]
            cached = sum(vals) / len(vals)
            self._reward_cache[genome] = cached
            self.evaluations += 1
        return cached

    def preload(self, rewards: Mapping[Genome, float]) -> None:
        """Seed the reward cache, e.g. from an exhaustive sweep on the same seeds."""
        self._reward_cache.update(rewards)

    def valid_actions(self, genome: Genome) -> tuple[int, ...]:
        """Action ids whose result passes the logic controller (stay is always kept)."""
        acts = self._valid_actions.get(genome)
        if acts is None:
            acts = tuple(a for a in range(self.n_actions)
                         if is_valid(apply_action(genome, a, self.catalog), self.rules))
            self._valid_actions[genome] = acts
        return acts

    def reset(self, genome: Genome) -> Genome:
        genome = self.catalog.project(genome)
        if not is_valid(genome, self.rules):
            raise ValueError(f"start genome {genome} is not valid")
        self.genome = genome
        return genome

    def step(self, action: int) -> StepResult:
        if self.genome is None:
            raise RuntimeError("call reset() before step()")
        if action not in self.valid_actions(self.genome):
            raise ValueError(f"action {action} is filtered out at {self.genome}")
        self.genome = apply_action(self.genome, action, self.catalog)
        return StepResult(self.genome, self.reward(self.genome), action)

    def states(self) -> Iterable[Genome]:
        from ..blocks import enumerate_genomes
        return (g for g in enumerate_genomes(self.catalog) if is_valid(g, self.rules))

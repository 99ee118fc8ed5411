"""Tabular Q-learning over genomes with epsilon-greedy exploration."""
from __future__ import annotations

import copy
import csv
import io
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..blocks import Genome
from .env import ProtocolEnv


@dataclass(frozen=True)
class AgentConfig:
    alpha: float = 1.0
    gamma: float = 0.8
    epsilon: float = 0.05
    steps_per_episode: int = 100
    history_len: int = 15
    sim_seconds_per_step: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.steps_per_episode < 1 or self.history_len < 1:
            raise ValueError("steps_per_episode and history_len must be positive")


class QTable:
    """Sparse state -> action -> value table; missing entries read as 0.

    States are genome indices, actions are mutation ids of an action space
    with ``n_actions`` entries.
    """

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self._q: dict[int, dict[int, float]] = {}

    def get(self, state: int, action: int) -> float:
        return self._q.get(state, {}).get(action, 0.0)

    def set(self, state: int, action: int, value: float) -> None:
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} outside 0..{self.n_actions - 1}")
        self._q.setdefault(state, {})[action] = float(value)

    def row(self, state: int, actions: Sequence[int]) -> np.ndarray:
        entries = self._q.get(state, {})
        return np.array([entries.get(a, 0.0) for a in actions])

    def max_value(self, state: int, actions: Sequence[int]) -> float:
        return float(self.row(state, actions).max())

    def __len__(self) -> int:
        return sum(len(v) for v in self._q.values())

    def __eq__(self, other) -> bool:
        return (isinstance(other, QTable) and self.n_actions == other.n_actions
                and self.items() == other.items())

    def states(self) -> list[int]:
        return sorted(self._q)

    def items(self) -> list[tuple[int, int, float]]:
        return [(s, a, v) for s in sorted(self._q) for a, v in sorted(self._q[s].items())]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state", "action", "value"])
        for s, a, v in self.items():
            w.writerow([s, a, repr(v)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text_or_path: str | Path, n_actions: int) -> "QTable":
        text = str(text_or_path)
        if "\n" not in text:
            text = Path(text).read_text()
        q = cls(n_actions)
        for row in csv.DictReader(io.StringIO(text)):
            q.set(int(row["state"]), int(row["action"]), float(row["value"]))
        return q


def q_update(q: QTable, s: int, a: int, r: float, s_next: int,
             next_actions: Sequence[int], cfg: AgentConfig) -> float:
    """One temporal-difference step; returns the new Q(s, a)."""
    old = q.get(s, a)
    target = r + cfg.gamma * q.max_value(s_next, next_actions)
    # convex form, so alpha = 1 stores the target bit for bit
    new = (1.0 - cfg.alpha) * old + cfg.alpha * target
    q.set(s, a, new)
    return new


def select_action(q: QTable, s: int, valid_actions: Sequence[int], epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy choice; greedy ties go to the lowest action id."""
    if not valid_actions:
        raise ValueError("no valid actions")
    actions = sorted(valid_actions)
    if rng.random() < epsilon:
        return actions[int(rng.integers(len(actions)))]
    return actions[int(np.argmax(q.row(s, actions)))]


@dataclass
class AgentState:
    """Current genome plus the recent throughput history (zero padded)."""

    genome: Genome
    history_len: int = 15
    history: deque = field(default=None)

    def __post_init__(self):
        if self.history is None:
            self.history = deque([0.0] * self.history_len, maxlen=self.history_len)

    def push(self, value: float) -> None:
        self.history.append(float(value))

    def vector(self) -> np.ndarray:
        from ..blocks import encode_normalized
        return np.array(encode_normalized(self.genome) + list(self.history))


@dataclass
class EpisodeStats:
    goal_visits: int
    mean_reward: float
    rewards: list[float]
    final_genome: Genome


def run_episode(env: ProtocolEnv, q: QTable, cfg: AgentConfig, goal: Genome,
                rng: np.random.Generator, start: Genome | None = None) -> EpisodeStats:
    """Run ``cfg.steps_per_episode`` learning steps from ``start`` (or the env's state)."""
    if q.n_actions != env.n_actions:
        raise ValueError("Q-table and environment have different action spaces")
    g = env.reset(start) if start is not None else env.genome
    if g is None:
        raise RuntimeError("environment has no current genome; pass start")
    visits = 0
    rewards = []
    for _ in range(cfg.steps_per_episode):
        acts = env.valid_actions(g)
        a = select_action(q, g.index, acts, cfg.epsilon, rng)
        try:
            step = env.step(a)
        except Exception as exc:
            raise RuntimeError(f"simulation failed at {g} with action {a}: {exc}") from exc
        q_update(q, g.index, a, step.reward, step.genome.index,
                 env.valid_actions(step.genome), cfg)
        g = step.genome
        visits += g == goal
        rewards.append(step.reward)
    return EpisodeStats(visits, float(np.mean(rewards)), rewards, g)


def warm_start(source: QTable, n_actions: int | None = None) -> QTable:
    """Independent copy of a trained table for reuse on another scenario."""
    if n_actions is not None and n_actions != source.n_actions:
        raise ValueError(f"source table has {source.n_actions} actions, target needs {n_actions}")
    return copy.deepcopy(source)


def greedy_rollout(env: ProtocolEnv, q: QTable, start: Genome, steps: int) -> Genome:
    """Follow the greedy policy and return the visited genome with the highest learned value."""
    g = env.reset(start)
    best, best_v = g, q.max_value(g.index, env.valid_actions(g))
    for _ in range(steps):
        acts = sorted(env.valid_actions(g))
        a = acts[int(np.argmax(q.row(g.index, acts)))]
        g = env.step(a).genome
        v = q.max_value(g.index, env.valid_actions(g))
        if v > best_v:
            best, best_v = g, v
    return best

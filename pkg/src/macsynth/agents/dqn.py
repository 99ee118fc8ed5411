"""A small multilayer perceptron Q-network with hand-written backpropagation."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

INPUT_WIDTH = 23
OUTPUT_WIDTH = 22
HIDDEN_WIDTHS = (64, 64, 64)

_MAGIC = b"MLPW"
_VERSION = 1
# magic, version, then the five layer widths as little-endian uint16
_HEADER = struct.Struct("<4sH5H")


class Mlp:
    """Affine layers with ReLU between them and a linear output layer."""

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        if len(weights) != len(biases):
            raise ValueError("one bias vector per weight matrix")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise ValueError(f"weight {w.shape} and bias {b.shape} disagree")

    @classmethod
    def init(cls, widths: Sequence[int] = (INPUT_WIDTH, *HIDDEN_WIDTHS, OUTPUT_WIDTH),
             seed: int = 0) -> "Mlp":
        """He-scaled normal weights and zero biases from a seeded stream."""
        rng = np.random.default_rng(seed)
        ws, bs = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            ws.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
            bs.append(np.zeros(fan_out))
        return cls(ws, bs)

    @classmethod
    def zeros(cls, widths: Sequence[int]) -> "Mlp":
        return cls([np.zeros((a, b)) for a, b in zip(widths[:-1], widths[1:])],
                   [np.zeros(b) for b in widths[1:]])

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self._forward(x)[0]

    def _forward(self, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.widths[0]:
            raise ValueError(f"input width {x.shape[-1]} != {self.widths[0]}")
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return h, acts

    def backward(self, acts: list[np.ndarray], grad_out: np.ndarray):
        """Gradients of a scalar loss given its gradient w.r.t. the output.

        ``acts`` comes from ``_forward`` on a 2-D batch. Returns lists of
        weight and bias gradients in layer order.
        """
        gw = [np.zeros_like(w) for w in self.weights]
        gb = [np.zeros_like(b) for b in self.biases]
        g = grad_out
        for k in range(len(self.weights) - 1, -1, -1):
            if k < len(self.weights) - 1:
                g = g * (acts[k + 1] > 0.0)
            gw[k] = acts[k].T @ g
            gb[k] = g.sum(axis=0)
            g = g @ self.weights[k].T
        return gw, gb

    def save(self, path: str | Path) -> None:
        """Header then float64 weights and biases, layer by layer, little-endian."""
        if len(self.widths) != 5:
            raise ValueError("the weight file format stores exactly five layer widths")
        with open(path, "wb") as f:
            f.write(_HEADER.pack(_MAGIC, _VERSION, *self.widths))
            for p in self.params():
                f.write(p.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "Mlp":
        data = Path(path).read_bytes()
        magic, version, *widths = _HEADER.unpack_from(data)
        if magic != _MAGIC or version != _VERSION:
            raise ValueError(f"{path} is not a version-{_VERSION} weight file")
        flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
        ws, bs, pos = [], [], 0
        for a, b in zip(widths[:-1], widths[1:]):
            ws.append(flat[pos:pos + a * b].reshape(a, b).copy())
            pos += a * b
            bs.append(flat[pos:pos + b].copy())
            pos += b
        if pos != flat.size:
            raise ValueError("weight file length does not match its header")
        return cls(ws, bs)


def mlp_forward(mlp: Mlp, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != mlp.widths[0]:
        raise ValueError(f"expected an input vector of length {mlp.widths[0]}")
    return mlp.forward(x)


def mse_loss_and_grads(mlp: Mlp, x: np.ndarray, target: np.ndarray):
    """Mean over all outputs of the squared error, plus its parameter gradients."""
    x = np.atleast_2d(x)
    out, acts = mlp._forward(x)
    diff = out - np.atleast_2d(target)
    loss = float(np.mean(diff ** 2))
    gw, gb = mlp.backward(acts, 2.0 * diff / diff.size)
    return loss, gw, gb


def gradient_check(mlp: Mlp, x: np.ndarray, target: np.ndarray, step: float = 1e-5) -> float:
    """Largest coordinatewise relative error between backprop and central differences."""
    _, gw, gb = mse_loss_and_grads(mlp, x, target)
    analytic = [g for pair in zip(gw, gb) for g in pair]
    worst = 0.0
    for p, g in zip(mlp.params(), analytic):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = mse_loss_and_grads(mlp, x, target)[0]
            flat[i] = keep - step
            down = mse_loss_and_grads(mlp, x, target)[0]
            flat[i] = keep
            numeric = (up - down) / (2 * step)
            denom = max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, float(abs(gflat[i] - numeric) / denom))
    return worst


class ReplayBuffer:
    """Ring buffer of transitions with uniform sampling."""

    def __init__(self, capacity: int = 1000, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list = []
        self._next = 0
        self.rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def sample_indices(self, n: int) -> np.ndarray:
        if not self._items:
            raise ValueError("buffer is empty")
        return self.rng.integers(0, len(self._items), size=n)

    def sample(self, n: int) -> list:
        return [self._items[i] for i in self.sample_indices(n)]


@dataclass(frozen=True)
class DqnConfig:
    gamma: float = 0.8
    learning_rate: float = 1e-3
    batch_size: int = 32
    target_every: int = 100
    buffer_capacity: int = 1000


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    # boolean mask of actions allowed in next_state; None means all
    next_mask: np.ndarray | None = None


def td_targets(batch: Sequence[Transition], target_net: Mlp, gamma: float) -> np.ndarray:
    nxt = target_net.forward(np.stack([t.next_state for t in batch]))
    for k, t in enumerate(batch):
        if t.next_mask is not None:
            nxt[k, ~t.next_mask] = -np.inf
    return np.array([t.reward for t in batch]) + gamma * nxt.max(axis=1)


def dqn_step(mlp: Mlp, batch: Sequence[Transition], target_net: Mlp, cfg: DqnConfig) -> float:
    """One gradient step on the mean squared TD error; returns the pre-step loss."""
    if not batch:
        raise ValueError("batch is empty")
    y = td_targets(batch, target_net, cfg.gamma)
    states = np.stack([t.state for t in batch])
    acts = np.array([t.action for t in batch])
    out, cache = mlp._forward(states)
    rows = np.arange(len(batch))
    err = out[rows, acts] - y
    loss = float(np.mean(err ** 2))
    grad_out = np.zeros_like(out)
    grad_out[rows, acts] = 2.0 * err / len(batch)
    gw, gb = mlp.backward(cache, grad_out)
    for w, g in zip(mlp.weights, gw):
        w -= cfg.learning_rate * g
    for b, g in zip(mlp.biases, gb):
        b -= cfg.learning_rate * g
    return loss


class DqnLearner:
    """Online network, target network, replay buffer and the copy schedule."""

    def __init__(self, cfg: DqnConfig = DqnConfig(), seed: int = 0,
                 widths: Sequence[int] = (INPUT_WIDTH, *HIDDEN_WIDTHS, OUTPUT_WIDTH)):
        self.cfg = cfg
        self.net = Mlp.init(widths, seed)
        self.target = self.net.copy()
        self.buffer = ReplayBuffer(cfg.buffer_capacity, seed + 1)
        self.steps = 0

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return mlp_forward(self.net, state)

    def observe(self, transition: Transition) -> float | None:
        """Store a transition and train on one sampled batch; returns the loss."""
        self.buffer.push(transition)
        loss = dqn_step(self.net, self.buffer.sample(self.cfg.batch_size), self.target, self.cfg)
        self.steps += 1
        if self.steps % self.cfg.target_every == 0:
            self.target = self.net.copy()
        return loss


def run_dqn_episode(env, learner: DqnLearner, cfg, goal, rng: np.random.Generator, state):
    """One episode of epsilon-greedy control with the Q-network.

    ``cfg`` is an :class:`AgentConfig`; ``state`` an :class:`AgentState` that
    is advanced in place. Returns an :class:`EpisodeStats`.
    """
    from .qlearning import EpisodeStats

    if learner.net.widths[-1] != env.n_actions:
        raise ValueError("network output width must equal the number of actions")
    env.reset(state.genome)
    visits, rewards = 0, []
    for _ in range(cfg.steps_per_episode):
        acts = sorted(env.valid_actions(state.genome))
        x = state.vector()
        if rng.random() < cfg.epsilon:
            a = acts[int(rng.integers(len(acts)))]
        else:
            q = learner.q_values(x)
            a = acts[int(np.argmax(q[acts]))]
        step = env.step(a)
        state.genome = step.genome
        state.push(step.reward)
        mask = np.zeros(env.n_actions, bool)
        mask[list(env.valid_actions(step.genome))] = True
        learner.observe(Transition(x, a, step.reward, state.vector(), mask))
        visits += step.genome == goal
        rewards.append(step.reward)
    return EpisodeStats(visits, float(np.mean(rewards)), rewards, state.genome)

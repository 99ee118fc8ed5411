import numpy as np
import pytest
from scipy import stats

from macsynth.agents import (DqnConfig, DqnLearner, Mlp, ReplayBuffer, Transition, dqn_step,
                             gradient_check, mlp_forward, mse_loss_and_grads)


def test_default_architecture():
    m = Mlp.init()
    assert m.widths == (23, 64, 64, 64, 22)
    assert mlp_forward(m, np.zeros(23)).shape == (22,)


def test_zero_weights_give_zero_output():
    m = Mlp.zeros((23, 64, 64, 64, 22))
    assert np.all(mlp_forward(m, np.random.default_rng(0).random(23)) == 0)


def test_first_layer_scaling_scales_preactivations():
    m = Mlp.init(seed=3)
    x = np.random.default_rng(1).random(23)
    base = x @ m.weights[0]
    m.weights[0] *= 2.5
    assert np.allclose(x @ m.weights[0], 2.5 * base)


def test_forward_is_deterministic_and_checks_width():
    x = np.linspace(0, 1, 23)
    assert np.array_equal(mlp_forward(Mlp.init(seed=5), x), mlp_forward(Mlp.init(seed=5), x))
    with pytest.raises(ValueError):
        mlp_forward(Mlp.init(), np.zeros(22))


def test_hand_derivative_of_single_weight():
    m = Mlp([np.array([[1.0]])], [np.array([0.0])])
    loss, gw, gb = mse_loss_and_grads(m, np.array([2.0]), np.array([1.0]))
    assert loss == 1.0
    assert gw[0][0, 0] == 4.0 and gb[0][0] == 2.0


def _transition(rng, n_out=22, reward=None):
    return Transition(rng.random(23), int(rng.integers(n_out)),
                      float(rng.random()) if reward is None else reward, rng.random(23))


def test_dqn_step_zero_error_means_no_change():
    m = Mlp.zeros((23, 8, 8, 8, 22))
    before = [p.copy() for p in m.params()]
    rng = np.random.default_rng(0)
    batch = [_transition(rng, reward=0.0) for _ in range(5)]
    loss = dqn_step(m, batch, m.copy(), DqnConfig())
    assert loss == 0.0
    assert all(np.array_equal(a, b) for a, b in zip(before, m.params()))


def test_dqn_step_reduces_loss_on_fixed_batch():
    rng = np.random.default_rng(4)
    m = Mlp.init((23, 16, 16, 16, 22), seed=0)
    target = m.copy()
    batch = [_transition(rng) for _ in range(32)]
    cfg = DqnConfig(learning_rate=1e-2)
    losses = [dqn_step(m, batch, target, cfg) for _ in range(200)]
    assert all(v >= 0 for v in losses)
    assert losses[-1] < 0.5 * losses[0]


def test_next_state_mask_limits_the_max():
    m = Mlp.zeros((23, 4, 4, 4, 3))
    m.biases[-1][:] = [0.0, 5.0, 1.0]
    mask = np.array([True, False, True])
    t = Transition(np.zeros(23), 0, 0.0, np.zeros(23), mask)
    from macsynth.agents.dqn import td_targets
    assert td_targets([t], m, 0.5)[0] == 0.5


@pytest.mark.parametrize("seed", range(10))
def test_gradient_check(seed):
    m = Mlp.init((23, 8, 8, 8, 22), seed=seed)
    rng = np.random.default_rng(100 + seed)
    assert gradient_check(m, rng.normal(size=23), rng.normal(size=22)) < 1e-4


def test_gradient_check_at_zero_gradient_point():
    m = Mlp.zeros((23, 4, 4, 4, 22))
    assert gradient_check(m, np.ones(23), np.zeros(22)) == 0.0


def test_gradient_check_is_deterministic():
    m = Mlp.init((23, 8, 8, 8, 22), seed=1)
    x, y = np.ones(23), np.zeros(22)
    assert gradient_check(m, x, y) == gradient_check(m, x, y)


def test_replay_buffer_capacity_and_uniformity():
    buf = ReplayBuffer(1000, seed=2)
    for i in range(2500):
        buf.push(i)
        assert len(buf) <= 1000
    assert sorted(buf.sample(1000)) != [] and set(buf._items) == set(range(1500, 2500))
    idx = buf.sample_indices(100_000)
    counts = np.bincount(idx, minlength=1000)
    assert stats.chisquare(counts).pvalue > 0.01


def test_weight_file_round_trip(tmp_path):
    m = Mlp.init(seed=9)
    path = tmp_path / "w.bin"
    m.save(path)
    raw = path.read_bytes()
    assert raw[:4] == b"MLPW"
    n_params = sum(p.size for p in m.params())
    assert len(raw) == 16 + 8 * n_params
    back = Mlp.load(path)
    assert back.widths == m.widths
    assert all(np.array_equal(a, b) for a, b in zip(back.params(), m.params()))
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        Mlp.load(path)


def test_target_network_copied_on_schedule():
    learner = DqnLearner(DqnConfig(target_every=3, batch_size=2), seed=0)
    rng = np.random.default_rng(0)
    first = learner.target.weights[0].copy()
    for step in range(1, 7):
        learner.observe(_transition(rng))
        same = np.array_equal(learner.target.weights[0], learner.net.weights[0])
        assert same == (step % 3 == 0)
    assert not np.array_equal(first, learner.target.weights[0])

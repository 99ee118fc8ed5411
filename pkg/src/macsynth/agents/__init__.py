from .dqn import (DqnConfig, DqnLearner, Mlp, ReplayBuffer, Transition, dqn_step, gradient_check,
                  mlp_forward, mse_loss_and_grads, run_dqn_episode)
from .env import ProtocolEnv, StepResult
from .qlearning import (AgentConfig, AgentState, EpisodeStats, QTable, greedy_rollout, q_update,
                        run_episode, select_action, warm_start)

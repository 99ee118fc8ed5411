"""Goal visits per episode for cold and warm-started tabular agents.

Prints the seed-averaged series as CSV columns. Pass ``--seeds N`` to
average over fewer runs for a quicker look.
"""
import argparse

from macsynth.agents import AgentConfig
from macsynth.blocks import ALOHA_CATALOG
from macsynth.harness import convergence_experiment, exhaustive_sweep
from macsynth.sim import Scenario


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", type=int, default=1)
    ap.add_argument("--warm-from", type=int, default=6)
    ap.add_argument("--episodes", type=int, default=60)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    cfg = AgentConfig()
    target = Scenario.preset(args.scenario)
    source = Scenario.preset(args.warm_from)
    sweep = exhaustive_sweep(target.replace(duration=cfg.sim_seconds_per_step), 3, ALOHA_CATALOG)
    src_sweep = exhaustive_sweep(source.replace(duration=cfg.sim_seconds_per_step), 3,
                                 ALOHA_CATALOG)
    kw = dict(episodes=args.episodes, seeds=range(args.seeds), catalog=ALOHA_CATALOG, cfg=cfg,
              sweep=sweep)
    cold = convergence_experiment(target, **kw)
    warm = convergence_experiment(target, warm_from=source, warm_sweep=src_sweep, **kw)
    print(f"# goal {sweep.goal} ({sweep.best_value:.4f}); warm source {source.name}")
    print("episode,cold,warm")
    for e in range(args.episodes):
        print(f"{e + 1},{cold.mean[e]:.1f},{warm.mean[e]:.1f}")


if __name__ == "__main__":
    main()

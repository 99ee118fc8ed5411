"""Rank every genome of the five-block catalog on a light, clean channel.

Run with ``python demos/sweep_walkthrough.py [scenario]``.
"""
import sys

from macsynth.blocks import ALOHA_CATALOG
from macsynth.harness import exhaustive_sweep
from macsynth.sim import Scenario


def main(number: int = 1) -> None:
    sc = Scenario.preset(number, duration=2.0)
    sweep = exhaustive_sweep(sc, k_seeds=3, catalog=ALOHA_CATALOG)
    print(f"{sc.name}: {sc.num_nodes} nodes, {len(sweep.ranking)} valid genomes, "
          f"seeds {sweep.seeds}")
    for i, (g, v) in enumerate(sweep.ranking[:10], 1):
        print(f"{i:3d}  {v:.4f}  {g}")
    worst, v = sweep.ranking[-1]
    print(f"last {v:.4f}  {worst}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 1)

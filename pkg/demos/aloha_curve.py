"""Simulated pure ALOHA throughput next to the analytic G*exp(-2G) curve."""
import math

import numpy as np

from macsynth.sim import Scenario, run_pure_aloha


def simulate(G: float, seeds=range(3)) -> float:
    vals = []
    for s in seeds:
        sc = Scenario(num_nodes=50, per_node_load=G * 10e6 / 50, duration=5.0, seed=s)
        r = run_pure_aloha(sc, ack=False, rate_mbps=10, header_bytes=0, preamble_slots=0)
        vals.append(r.normalized_throughput)
    return float(np.mean(vals))


def main() -> None:
    print("   G   simulated  analytic")
    for G in (0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0):
        print(f"{G:5.2f}  {simulate(G):9.4f}  {G * math.exp(-2 * G):8.4f}")


if __name__ == "__main__":
    main()

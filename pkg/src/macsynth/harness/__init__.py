from .experiments import (CONVERGENCE_THRESHOLD, RAMPS, BlockReport, ComparisonRow,
                          ConvergenceResult, Ramp, aloha_comparison, block_selection_report,
                          convergence_experiment, dcf_comparison, episodes_to_threshold,
                          mean_throughput, mean_uplift, rows_to_csv, train, trained_genome)
from .output import ExperimentKind, ExperimentSpec, write_outputs
from .rewards import reward_energy_weighted, reward_throughput
from .sweep import SweepResult, exhaustive_sweep, rank, sweep_seeds

from .aloha import run_pure_aloha
from .core import EmptyResultError, SimResult, dcf_genome, run, run_dcf, run_traced
from .phy import (backoff_next_cw, build_frame, corruption_probability, frame_corrupt,
                  transmission_duration)
from .scenario import LOAD_BPS, PRESETS, Scenario, ScenarioError

"""Network scenarios and the eight preset configurations."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .phy import CHANNEL_CAPACITY_BPS, SLOT_SECONDS

# per-node offered load in bit/s (8 pkt/s and 470 pkt/s of 1500 B frames)
LOAD_BPS = {
    "low": 8 * 1500 * 8,
    "average": 500e3,
    "high": 470 * 1500 * 8,
    "saturated": 470 * 1500 * 8,
}

PRESETS = {
    1: (5, "low", 0.0),
    2: (5, "low", 1e-4),
    3: (15, "average", 0.0),
    4: (15, "average", 1e-4),
    5: (25, "high", 0.0),
    6: (25, "high", 1e-4),
    7: (50, "saturated", 0.0),
    8: (50, "saturated", 1e-4),
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    num_nodes: int
    per_node_load: float
    app_packet_bytes: int = 500
    ber: float = 0.0
    duration: float = 2.0
    seed: int = 0
    slot: float = SLOT_SECONDS
    channel_capacity: float = CHANNEL_CAPACITY_BPS
    # placement area side in metres; recorded only, every node hears every other
    area_m: float = 200.0
    name: str = ""

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ScenarioError("num_nodes must be at least 1")
        if not 0.0 <= self.ber < 1.0:
            raise ScenarioError("ber must lie in [0, 1)")
        if self.duration < 0:
            raise ScenarioError("duration must be positive")
        if self.per_node_load < 0:
            raise ScenarioError("per_node_load must be non-negative")
        if self.app_packet_bytes <= 0:
            raise ScenarioError("app_packet_bytes must be positive")

    @classmethod
    def preset(cls, number: int, **overrides) -> "Scenario":
        try:
            nodes, load, ber = PRESETS[int(number)]
        except KeyError:
            raise ScenarioError(f"no preset scenario {number}; choose 1-8") from None
        fields = dict(num_nodes=nodes, per_node_load=LOAD_BPS[load], ber=ber,
                      name=f"scenario{number}")
        fields.update(overrides)
        return cls(**fields)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    @property
    def n_slots(self) -> int:
        return int(round(self.duration / self.slot))

    @property
    def offered_bps(self) -> float:
        return self.num_nodes * self.per_node_load

    @property
    def packet_rate(self) -> float:
        """Mean packet arrivals per second at each node."""
        return self.per_node_load / (self.app_packet_bytes * 8)


_FLOAT_KEYS = {"per_node_load", "ber", "duration", "slot", "channel_capacity", "area_m"}
_INT_KEYS = {"num_nodes", "app_packet_bytes", "seed"}


def scenario_from_mapping(values: Mapping[str, str]) -> Scenario:
    """Build a scenario from string key/value pairs (``scenario = N`` picks a preset)."""
    fields: dict = {}
    for key, raw in values.items():
        if key in _FLOAT_KEYS:
            fields[key] = float(raw)
        elif key in _INT_KEYS:
            fields[key] = int(raw)
        elif key == "load":
            fields["per_node_load"] = LOAD_BPS[str(raw).lower()]
    if "scenario" in values:
        return Scenario.preset(int(values["scenario"]), **fields)
    missing = {"num_nodes", "per_node_load"} - fields.keys()
    if missing:
        raise ScenarioError(f"missing config keys: {', '.join(sorted(missing))}")
    return Scenario(**fields)


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str.lower
    text = Path(path).read_text()
    parser.read_string("[config]\n" + text)
    return dict(parser["config"])

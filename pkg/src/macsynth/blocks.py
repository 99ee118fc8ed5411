"""MAC building-block catalog, protocol genomes and their encodings.

A genome is one option index per block, in the fixed order of :class:`BlockId`.
The agent moves through genome space by single-coordinate mutations, so this
module also owns the action numbering shared by the tabular and neural agents.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Iterator, Sequence


class BlockId(IntEnum):
    BACKOFF = 0
    ACK = 1
    FRAGMENTATION = 2
    AGGREGATION = 3
    RTS_CTS = 4
    CONTENTION_WINDOW = 5
    CARRIER_SENSE = 6
    DATA_RATE = 7

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    BlockId.BACKOFF: "backoff",
    BlockId.ACK: "ack",
    BlockId.FRAGMENTATION: "fragmentation",
    BlockId.AGGREGATION: "aggregation",
    BlockId.RTS_CTS: "rts_cts",
    BlockId.CONTENTION_WINDOW: "cw",
    BlockId.CARRIER_SENSE: "cs",
    BlockId.DATA_RATE: "data_rate",
}

# accepted spellings for --catalog style arguments
_ALIASES = {
    "backoff": BlockId.BACKOFF, "bo": BlockId.BACKOFF,
    "ack": BlockId.ACK,
    "fragmentation": BlockId.FRAGMENTATION, "frag": BlockId.FRAGMENTATION, "fr": BlockId.FRAGMENTATION,
    "aggregation": BlockId.AGGREGATION, "agg": BlockId.AGGREGATION, "ag": BlockId.AGGREGATION,
    "rts_cts": BlockId.RTS_CTS, "rtscts": BlockId.RTS_CTS, "rts": BlockId.RTS_CTS,
    "cw": BlockId.CONTENTION_WINDOW, "contention_window": BlockId.CONTENTION_WINDOW,
    "contentionwindow": BlockId.CONTENTION_WINDOW,
    "cs": BlockId.CARRIER_SENSE, "carrier_sense": BlockId.CARRIER_SENSE,
    "carriersense": BlockId.CARRIER_SENSE,
    "dr": BlockId.DATA_RATE, "data_rate": BlockId.DATA_RATE, "datarate": BlockId.DATA_RATE,
    "rate": BlockId.DATA_RATE,
}


class DependencyKind(Enum):
    STRONG = "strong"
    WEAK = "weak"
    CONDITIONAL = "conditional"


# Canonical option names, in option-index order. Off / excluded is always index 0
# for the toggleable blocks.
OPTION_NAMES: dict[BlockId, tuple[str, ...]] = {
    BlockId.BACKOFF: ("off", "BEB", "EIED"),
    BlockId.ACK: ("noack", "ACK"),
    BlockId.FRAGMENTATION: ("off", "200", "500", "1000"),
    BlockId.AGGREGATION: ("off", "2000"),
    BlockId.RTS_CTS: ("off", "RTS"),
    BlockId.CONTENTION_WINDOW: ("15", "31", "63", "127", "255", "511", "1023"),
    BlockId.CARRIER_SENSE: ("off", "CS"),
    BlockId.DATA_RATE: ("6", "9", "12", "24", "36", "48", "54"),
}

DOMAIN_SIZES: tuple[int, ...] = tuple(len(OPTION_NAMES[b]) for b in BlockId)

CW_VALUES = (15, 31, 63, 127, 255, 511, 1023)
RATES_MBPS = (6, 9, 12, 24, 36, 48, 54)
FRAGMENT_LIMITS = (1500, 200, 500, 1000)
AGGREGATE_LIMITS = (1500, 2000)
DEFAULT_FRAME_LIMIT = 1500

# parameter blocks are always present; their encoding is 1-based
PARAMETER_BLOCKS = frozenset({BlockId.CONTENTION_WINDOW, BlockId.DATA_RATE})


class GenomeError(ValueError):
    """Base class for malformed genome inputs."""


class MalformedVectorError(GenomeError):
    pass


class OutOfRangeError(GenomeError):
    def __init__(self, block: BlockId, value):
        super().__init__(f"{block.label}: value {value!r} outside its option domain")
        self.block = block


@dataclass(frozen=True, order=True)
class Genome:
    """One point of the block-configuration space (0-based option indices)."""

    settings: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(v) for v in self.settings)
        if len(s) != len(BlockId):
            raise MalformedVectorError(f"genome needs {len(BlockId)} settings, got {len(s)}")
        for b, v in zip(BlockId, s):
            if not 0 <= v < DOMAIN_SIZES[b]:
                raise OutOfRangeError(b, v)
        object.__setattr__(self, "settings", s)

    def __getitem__(self, block: BlockId) -> int:
        return self.settings[block]

    def replace(self, **changes: int | str) -> "Genome":
        s = list(self.settings)
        for key, value in changes.items():
            b = parse_block(key)
            s[b] = value if isinstance(value, int) else _option_index(b, str(value))
        return Genome(tuple(s))

    # decoded views used by the simulator
    @property
    def backoff(self) -> str:
        return OPTION_NAMES[BlockId.BACKOFF][self.settings[BlockId.BACKOFF]]

    @property
    def ack(self) -> bool:
        return self.settings[BlockId.ACK] == 1

    @property
    def rts_cts(self) -> bool:
        return self.settings[BlockId.RTS_CTS] == 1

    @property
    def carrier_sense(self) -> bool:
        return self.settings[BlockId.CARRIER_SENSE] == 1

    @property
    def cw_min(self) -> int:
        return CW_VALUES[self.settings[BlockId.CONTENTION_WINDOW]]

    @property
    def rate_mbps(self) -> int:
        return RATES_MBPS[self.settings[BlockId.DATA_RATE]]

    @property
    def payload_limit(self) -> int:
        if self.settings[BlockId.AGGREGATION]:
            return AGGREGATE_LIMITS[self.settings[BlockId.AGGREGATION]]
        return FRAGMENT_LIMITS[self.settings[BlockId.FRAGMENTATION]]

    @property
    def index(self) -> int:
        """Mixed-radix id over the full genome space."""
        i = 0
        for b in BlockId:
            i = i * DOMAIN_SIZES[b] + self.settings[b]
        return i

    @classmethod
    def from_index(cls, i: int) -> "Genome":
        if not 0 <= i < genome_space_size():
            raise GenomeError(f"genome id {i} out of range")
        s = []
        for size in reversed(DOMAIN_SIZES):
            i, r = divmod(i, size)
            s.append(r)
        return cls(tuple(reversed(s)))

    def __str__(self) -> str:
        return format_genome(self)


def _option_index(block: BlockId, name: str) -> int:
    key = name.strip().lower()
    for i, opt in enumerate(OPTION_NAMES[block]):
        if opt.lower() == key:
            return i
    # a few friendly spellings
    extra = {"on": 1, "no": 0, "none": 0, "0": 0} if block not in PARAMETER_BLOCKS else {}
    if key in extra and DOMAIN_SIZES[block] == 2:
        return extra[key]
    raise OutOfRangeError(block, name)


def parse_block(name: str | BlockId) -> BlockId:
    if isinstance(name, BlockId):
        return name
    key = name.strip().lower().replace("-", "_").replace("/", "")
    try:
        return _ALIASES[key]
    except KeyError:
        raise GenomeError(f"unknown block {name!r}") from None


def format_genome(genome: Genome) -> str:
    """Comma-separated canonical option names, e.g. ``BEB,ACK,off,off,off,15,CS,54``."""
    return ",".join(OPTION_NAMES[b][genome.settings[b]] for b in BlockId)


def parse_genome(text: str) -> Genome:
    parts = [p for p in text.split(",")]
    if len(parts) != len(BlockId):
        raise MalformedVectorError(f"genome string needs {len(BlockId)} fields, got {len(parts)}")
    return Genome(tuple(_option_index(b, p) for b, p in zip(BlockId, parts)))


DCF_GENOME = Genome((1, 1, 0, 0, 0, 0, 1, 6))


# ---------------------------------------------------------------- catalogs


@dataclass(frozen=True)
class Catalog:
    """The set of blocks the agent may vary.

    Blocks outside the catalog are excluded from the design: toggleable
    blocks sit at Off, parameter blocks at their defaults (CW 15, 54 Mbps).
    """

    blocks: tuple[BlockId, ...] = tuple(BlockId)
    base: Genome = field(default=Genome((0, 0, 0, 0, 0, 0, 0, 6)))

    def __post_init__(self):
        blocks = tuple(sorted({parse_block(b) for b in self.blocks}))
        if not blocks:
            raise GenomeError("catalog must contain at least one block")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def parse(cls, text: str) -> "Catalog":
        if text.strip().lower() in ("", "all", "full"):
            return FULL_CATALOG
        return cls(tuple(parse_block(t) for t in text.split(",") if t.strip()))

    @property
    def is_full(self) -> bool:
        return len(self.blocks) == len(BlockId)

    def contains(self, genome: Genome) -> bool:
        return all(genome[b] == self.base[b] for b in BlockId if b not in self.blocks)

    def project(self, genome: Genome) -> Genome:
        """Pin every non-catalog block of ``genome`` to the catalog base."""
        s = [genome[b] if b in self.blocks else self.base[b] for b in BlockId]
        return Genome(tuple(s))

    def __str__(self) -> str:
        return ",".join(b.label for b in self.blocks)


FULL_CATALOG = Catalog()
# the ALOHA-comparison block set: ACK, Backoff, CW, Carrier Sensing, Data Rate
ALOHA_CATALOG = Catalog((BlockId.ACK, BlockId.BACKOFF, BlockId.CONTENTION_WINDOW,
                         BlockId.CARRIER_SENSE, BlockId.DATA_RATE))


def genome_space_size(catalog: Catalog | Iterable[BlockId | str] | None = None) -> int:
    catalog = _as_catalog(catalog)
    return math.prod(DOMAIN_SIZES[b] for b in catalog.blocks)


def enumerate_genomes(catalog: Catalog | Iterable[BlockId | str] | None = None) -> Iterator[Genome]:
    """All genomes of a catalog, in ascending encoding order."""
    catalog = _as_catalog(catalog)
    ranges = [range(DOMAIN_SIZES[b]) if b in catalog.blocks else (catalog.base[b],)
              for b in BlockId]
    for s in itertools.product(*ranges):
        yield Genome(s)


def _as_catalog(catalog) -> Catalog:
    if catalog is None:
        return FULL_CATALOG
    if isinstance(catalog, Catalog):
        return catalog
    return Catalog(tuple(parse_block(b) for b in catalog))


# ---------------------------------------------------------------- encodings


def encode(genome: Genome) -> list[int]:
    """Integer state vector: 0 marks an excluded block, otherwise a 1-based option."""
    return [genome[b] + 1 if b in PARAMETER_BLOCKS else genome[b] for b in BlockId]


def encode_normalized(genome: Genome) -> list[float]:
    """Neural-input form: 1-based option index over domain size, in (0, 1]."""
    return [(genome[b] + 1) / DOMAIN_SIZES[b] for b in BlockId]


def decode(vector: Sequence[int]) -> Genome:
    vector = list(vector)
    if len(vector) != len(BlockId):
        raise MalformedVectorError(f"encoded genome needs {len(BlockId)} values, got {len(vector)}")
    s = []
    for b, v in zip(BlockId, vector):
        if isinstance(v, float) and not v.is_integer():
            raise OutOfRangeError(b, v)
        v = int(v)
        idx = v - 1 if b in PARAMETER_BLOCKS else v
        if not 0 <= idx < DOMAIN_SIZES[b]:
            raise OutOfRangeError(b, v)
        s.append(idx)
    return Genome(tuple(s))


# ---------------------------------------------------------------- mutations

STAY = 0


def action_table(catalog: Catalog | None = None) -> list[tuple[BlockId, int] | None]:
    """Action id -> (block, cyclic offset); id 0 is the stay action."""
    return list(_action_table(_as_catalog(catalog)))


@functools.lru_cache(maxsize=None)
def _action_table(catalog: Catalog) -> tuple[tuple[BlockId, int] | None, ...]:
    table: list[tuple[BlockId, int] | None] = [None]
    for b in catalog.blocks:
        table.extend((b, j) for j in range(1, DOMAIN_SIZES[b]))
    return tuple(table)


def apply_action(genome: Genome, action: int, catalog: Catalog | None = None) -> Genome:
    entry = _action_table(_as_catalog(catalog))[action]
    if entry is None:
        return genome
    b, j = entry
    s = list(genome.settings)
    s[b] = (s[b] + j) % DOMAIN_SIZES[b]
    return Genome(tuple(s))


def neighbors(genome: Genome, catalog: Catalog | None = None) -> set[Genome]:
    """Every genome reachable by changing exactly one catalog block."""
    catalog = _as_catalog(catalog)
    out = set()
    for b in catalog.blocks:
        for v in range(DOMAIN_SIZES[b]):
            if v != genome[b]:
                s = list(genome.settings)
                s[b] = v
                out.add(Genome(tuple(s)))
    return out


# ---------------------------------------------------------------- block specs


@dataclass(frozen=True)
class BlockSpec:
    """Event / parameter / state / function / dependency description of a block."""

    block: BlockId
    events: frozenset[str]
    params: frozenset[str]
    state: frozenset[str]
    function: str
    deps: tuple[tuple[BlockId, DependencyKind], ...] = ()

    def depends_on(self, target: BlockId, kind: DependencyKind | None = None) -> bool:
        return any(t == target and (kind is None or k == kind) for t, k in self.deps)


def _spec(block, events, params, state, function, deps=()):
    return BlockSpec(block, frozenset(events), frozenset(params), frozenset(state), function,
                     tuple(deps))


BLOCK_SPECS: dict[BlockId, BlockSpec] = {
    BlockId.BACKOFF: _spec(BlockId.BACKOFF, {"ACK_timeout"}, {"CW"}, {"Freeze", "Countdown"},
                           "BEB", [(BlockId.ACK, DependencyKind.STRONG)]),
    BlockId.ACK: _spec(BlockId.ACK, {"DataReceived"}, {"ACK_timeout"}, {"WaitAck"}, "ACK"),
    BlockId.FRAGMENTATION: _spec(BlockId.FRAGMENTATION, {"FrameReady"}, {"FragmentLimit"},
                                 {"FragmentIndex"}, "Fragment"),
    BlockId.AGGREGATION: _spec(BlockId.AGGREGATION, {"FrameReady"}, {"AggregateLimit"},
                               {"PackedCount"}, "Aggregate"),
    BlockId.RTS_CTS: _spec(BlockId.RTS_CTS, {"AccessGranted", "CTS_timeout"}, {"Duration"},
                           {"WaitCts"}, "Handshake", [(BlockId.ACK, DependencyKind.STRONG)]),
    BlockId.CONTENTION_WINDOW: _spec(BlockId.CONTENTION_WINDOW, set(), {"CWmin"}, set(),
                                     "BoundCounter",
                                     [(BlockId.BACKOFF, DependencyKind.WEAK)]),
    BlockId.CARRIER_SENSE: _spec(BlockId.CARRIER_SENSE, {"MediumBusy", "MediumIdle"},
                                 {"DIFS"}, {"Idle", "Busy", "NAV"}, "Sense",
                                 [(BlockId.RTS_CTS, DependencyKind.CONDITIONAL)]),
    BlockId.DATA_RATE: _spec(BlockId.DATA_RATE, set(), {"RateMbps"}, set(), "Modulate"),
}


def block_spec(block: BlockId) -> BlockSpec:
    return BLOCK_SPECS[block]


def backoff_block_spec() -> BlockSpec:
    return BLOCK_SPECS[BlockId.BACKOFF]

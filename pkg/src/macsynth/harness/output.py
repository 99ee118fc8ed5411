"""Experiment specs and on-disk outputs (manifest plus CSV tables)."""
from __future__ import annotations

import dataclasses
import datetime as dt
import json
import platform
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .. import __version__
from ..agents import AgentConfig
from ..blocks import FULL_CATALOG, Catalog


class ExperimentKind(Enum):
    SWEEP = "sweep"
    CONVERGENCE = "convergence"
    ALOHA_COMPARE = "aloha_compare"
    DCF_COMPARE = "dcf_compare"
    BLOCK_REPORT = "block_report"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    scenarios: tuple[int, ...] = (1,)
    repetitions: int = 1
    seeds: tuple[int, ...] = (0, 1, 2)
    agent: AgentConfig = AgentConfig()
    catalog: Catalog = FULL_CATALOG
    output: Path = Path("results")
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")

    def echo(self) -> dict:
        return {
            "kind": self.kind.value,
            "scenarios": list(self.scenarios),
            "repetitions": self.repetitions,
            "seeds": list(self.seeds),
            "agent": dataclasses.asdict(self.agent),
            "catalog": str(self.catalog),
            "options": {k: str(v) for k, v in self.options.items()},
        }


def versions() -> dict:
    return {"macsynth": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "numba": numba.__version__}


def make_run_dir(root: str | Path, kind: ExperimentKind,
                 now: dt.datetime | None = None) -> Path:
    """Fresh ``<root>/<kind>-<timestamp>`` directory (suffixed if it already exists)."""
    stamp = (now or dt.datetime.now()).strftime("%Y%m%d-%H%M%S")
    base = Path(root) / f"{kind.value}-{stamp}"
    path, n = base, 1
    while path.exists():
        path = base.with_name(f"{base.name}-{n}")
        n += 1
    path.mkdir(parents=True)
    return path


def write_outputs(spec: ExperimentSpec, tables: dict[str, str],
                  now: dt.datetime | None = None) -> Path:
    """Write ``manifest.json`` and one CSV per named table; returns the directory."""
    out = make_run_dir(spec.output, spec.kind, now)
    manifest = {"spec": spec.echo(), "versions": versions(), "tables": sorted(tables)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for name, text in tables.items():
        (out / f"{name}.csv").write_text(text)
    return out


def series_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    lines += [",".join(repr(c) if isinstance(c, float) else str(c) for c in r) for r in rows]
    return "\n".join(lines) + "\n"

"""Logic controller: dependency rules, execution order and action filtering."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .blocks import BlockId, DependencyKind, Genome, OPTION_NAMES

__all__ = [
    "DependencyKind", "DependencyRule", "RuleTable", "ValidationReport", "NavSource", "Stage",
    "DEFAULT_RULES", "CORE_RULES", "ContractViolation",
    "validate", "execution_order", "nav_source", "filter_actions",
]


class ContractViolation(ValueError):
    """A precondition of an operation does not hold (e.g. an invalid genome)."""


@dataclass(frozen=True)
class DependencyRule:
    """One if-then check. ``check`` returns a message when the rule fires."""

    rule_id: str
    kind: DependencyKind
    check: Callable[[Genome], str | None]
    informational: bool = False
    enabled: bool = True


def _r1(g: Genome) -> str | None:
    if g[BlockId.BACKOFF] != 0 and not g.ack:
        return f"backoff {g.backoff} needs ACK: no ACK_timeout event without the ACK block"
    return None


def _r2(g: Genome) -> str | None:
    if g.rts_cts and not g.ack:
        return "RTS/CTS needs ACK: the handshake presumes control-frame reception"
    return None


def _r3(g: Genome) -> str | None:
    if g[BlockId.BACKOFF] == 0:
        cw = OPTION_NAMES[BlockId.CONTENTION_WINDOW][g[BlockId.CONTENTION_WINDOW]]
        return f"CWmin {cw} is inert while backoff is off"
    return None


R1 = DependencyRule("R1", DependencyKind.STRONG, _r1)
R2 = DependencyRule("R2", DependencyKind.STRONG, _r2)
R3 = DependencyRule("R3", DependencyKind.WEAK, _r3, informational=True)


@dataclass(frozen=True)
class RuleTable:
    """Ordered rule list; evaluation order is table order."""

    rules: tuple[DependencyRule, ...]

    def only(self, *rule_ids: str) -> "RuleTable":
        keep = {r.upper() for r in rule_ids}
        return RuleTable(tuple(replace(r, enabled=r.rule_id in keep) for r in self.rules))

    def without(self, *rule_ids: str) -> "RuleTable":
        drop = {r.upper() for r in rule_ids}
        return RuleTable(tuple(replace(r, enabled=r.enabled and r.rule_id not in drop)
                               for r in self.rules))

    @property
    def enabled_ids(self) -> tuple[str, ...]:
        return tuple(r.rule_id for r in self.rules if r.enabled)

    @classmethod
    def parse(cls, text: str) -> "RuleTable":
        """Rule selection from a config value such as ``R1,R3``."""
        ids = [t.strip().upper() for t in text.split(",") if t.strip()]
        unknown = set(ids) - {r.rule_id for r in DEFAULT_RULES.rules}
        if unknown:
            raise ValueError(f"unknown rule ids: {sorted(unknown)}")
        return DEFAULT_RULES.only(*ids)

    def __hash__(self):
        return hash(self.enabled_ids)

    def __eq__(self, other):
        return isinstance(other, RuleTable) and self.enabled_ids == other.enabled_ids


DEFAULT_RULES = RuleTable((R1, R2, R3))
# R1 plus the informational CW notice, without the artifact rule R2
CORE_RULES = DEFAULT_RULES.only("R1", "R3")


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[tuple[str, str], ...] = ()
    notices: tuple[tuple[str, str], ...] = ()

    def __str__(self) -> str:
        if self.valid:
            head = "valid"
        else:
            head = "invalid: " + ",".join(rid for rid, _ in self.violations)
        lines = [head]
        lines += [f"  {rid} violation: {msg}" for rid, msg in self.violations]
        lines += [f"  {rid} notice: {msg}" for rid, msg in self.notices]
        return "\n".join(lines)


def validate(genome: Genome, rules: RuleTable = DEFAULT_RULES) -> ValidationReport:
    violations, notices = [], []
    for rule in rules.rules:
        if not rule.enabled:
            continue
        msg = rule.check(genome)
        if msg is not None:
            (notices if rule.informational else violations).append((rule.rule_id, msg))
    return ValidationReport(not violations, tuple(violations), tuple(notices))


def is_valid(genome: Genome, rules: RuleTable = DEFAULT_RULES) -> bool:
    return validate(genome, rules).valid


class NavSource(Enum):
    RTS_CTS_DURATION = "rts_cts_duration"
    FRAME_DURATION_FIELD = "frame_duration_field"


def nav_source(genome: Genome) -> NavSource:
    return NavSource.RTS_CTS_DURATION if genome.rts_cts else NavSource.FRAME_DURATION_FIELD


class Stage(Enum):
    """Per-transmission pipeline stages."""

    CARRIER_SENSE = "carrier_sense"
    BACKOFF = "backoff"
    RTS_CTS = "rts_cts"
    FRAMING = "framing"
    TRANSMIT = "transmit"
    ACK = "ack"


def execution_order(genome: Genome, rules: RuleTable = DEFAULT_RULES) -> list[Stage]:
    report = validate(genome, rules)
    if not report.valid:
        raise ContractViolation(f"cannot order an invalid genome ({report})")
    present = {
        Stage.CARRIER_SENSE: genome.carrier_sense,
        Stage.BACKOFF: genome[BlockId.BACKOFF] != 0,
        Stage.RTS_CTS: genome.rts_cts,
        Stage.FRAMING: genome[BlockId.FRAGMENTATION] != 0 or genome[BlockId.AGGREGATION] != 0,
        Stage.TRANSMIT: True,
        Stage.ACK: genome.ack,
    }
    return [s for s in Stage if present[s]]


def filter_actions(genome: Genome, candidates: Iterable[Genome],
                   rules: RuleTable = DEFAULT_RULES) -> set[Genome]:
    return {c for c in candidates if validate(c, rules).valid}


def valid_genomes(genomes: Sequence[Genome] | Iterable[Genome],
                  rules: RuleTable = DEFAULT_RULES) -> list[Genome]:
    return [g for g in genomes if validate(g, rules).valid]

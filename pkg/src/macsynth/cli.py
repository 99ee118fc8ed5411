"""Command-line entry point.

Exit status is 0 on success, 1 for usage errors (bad flags, missing config
keys, malformed genomes) and 2 when a run fails. CSV goes to stdout and logs
to stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .agents import (AgentConfig, AgentState, DqnConfig, DqnLearner, Mlp, gradient_check,
                     run_dqn_episode, warm_start)
from .blocks import ALOHA_CATALOG, FULL_CATALOG, Catalog, GenomeError, parse_genome
from .harness import (ExperimentKind, ExperimentSpec, aloha_comparison, block_selection_report,
                      dcf_comparison, exhaustive_sweep, mean_uplift,
                      rows_to_csv, write_outputs)
from .harness.experiments import make_env, train
from .harness.output import series_csv
from .logic import DEFAULT_RULES, RuleTable, validate
from .sim import Scenario, ScenarioError, SimResult, run, run_pure_aloha
from .sim.scenario import read_config, scenario_from_mapping

log = logging.getLogger("macsynth")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


SUBCOMMANDS = ("simulate", "validate", "sweep", "train", "compare-aloha", "compare-dcf",
               "blocks-report", "gradcheck")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file; flags override its entries")
    p.add_argument("--seed", type=int, help="root seed for every random stream (default 0)")


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", type=int, help="preset scenario number 1-8")
    p.add_argument("--duration", type=float, help="simulated seconds per run")
    p.add_argument("--rules", help="enabled dependency rules, e.g. R1,R3 (default R1,R2,R3)")


def _output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output-dir", type=Path,
                   help="root for timestamped result directories (default ./results)")
    p.add_argument("--no-files", action="store_true", help="print CSV only, write nothing")


def _agent_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--episodes", type=int, help="training episodes (default 60)")
    p.add_argument("--gamma", type=float, help="discount factor (default 0.8)")
    p.add_argument("--catalog", help="comma-separated block names to learn over (default all)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="macsynth", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one genome (or pure ALOHA) and print a CSV row")
    _common(p)
    _scenario_flags(p)
    p.add_argument("--genome", help="comma-separated option names, one per block")
    p.add_argument("--aloha", action="store_true", help="simulate pure ALOHA instead of a genome")
    p.add_argument("--header", action="store_true", help="print the CSV header first")

    p = sub.add_parser("validate", help="check a genome against the dependency rules")
    _common(p)
    p.add_argument("--genome", help="comma-separated option names, one per block")
    p.add_argument("--rules", help="enabled dependency rules, e.g. R1,R3")

    p = sub.add_parser("sweep", help="rank every valid genome by mean throughput")
    _common(p)
    _scenario_flags(p)
    _output_flags(p)
    p.add_argument("--catalog", help="comma-separated block names to vary (default all)")
    p.add_argument("--k-seeds", type=int, help="seeds per genome (default 3)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")

    p = sub.add_parser("train", help="train an agent and print its per-episode goal visits")
    _common(p)
    _scenario_flags(p)
    _output_flags(p)
    _agent_flags(p)
    p.add_argument("--agent", choices=("tabular", "dqn"), help="learner (default tabular)")
    p.add_argument("--warm-from", type=int, help="pretrain on this preset first (tabular only)")
    p.add_argument("--k-seeds", type=int, help="seeds per reward evaluation (default 3)")

    p = sub.add_parser("compare-aloha", help="restricted-catalog agent versus pure ALOHA")
    _common(p)
    _output_flags(p)
    _agent_flags(p)
    p.add_argument("--k-seeds", type=int, help="evaluation seeds (default 3)")

    p = sub.add_parser("compare-dcf", help="agent versus the DCF genome on a node ramp")
    _common(p)
    _output_flags(p)
    _agent_flags(p)
    p.add_argument("--ramp", choices=("low", "high"), help="node ramp (default low)")
    p.add_argument("--k-seeds", type=int, help="evaluation seeds (default 3)")

    p = sub.add_parser("blocks-report", help="block option frequencies over repeated trainings")
    _common(p)
    _output_flags(p)
    _agent_flags(p)
    p.add_argument("--repetitions", type=int, help="trainings per scenario (default 20)")

    p = sub.add_parser("gradcheck", help="finite-difference check of the Q-network gradients")
    _common(p)
    p.add_argument("--count", type=int, help="number of seeds to check (default 10)")
    return parser


# ------------------------------------------------------------------ settings

def _settings(args: argparse.Namespace) -> dict[str, str]:
    """Config-file entries overridden by any flag that was given."""
    values = read_config(args.config) if getattr(args, "config", None) else {}
    for key, val in vars(args).items():
        if key in ("config", "command", "verbose") or val is None or val is False:
            continue
        values[key.replace("-", "_")] = str(val)
    return values


def _get(values: dict, key: str, kind=str, default=None):
    if key not in values:
        if default is None:
            raise UsageError(f"missing config key: {key}")
        return default
    try:
        return kind(values[key])
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {values[key]!r}") from exc


def _scenario(values: dict) -> Scenario:
    scen_keys = {k: v for k, v in values.items() if k in {
        "scenario", "num_nodes", "per_node_load", "load", "app_packet_bytes", "ber", "duration",
        "seed", "slot", "channel_capacity", "area_m"}}
    if "scenario" not in scen_keys and "num_nodes" not in scen_keys:
        raise UsageError("missing config key: scenario (or num_nodes and per_node_load)")
    try:
        return scenario_from_mapping(scen_keys)
    except ScenarioError as exc:
        raise UsageError(str(exc)) from exc


def _rules(values: dict) -> RuleTable:
    if "rules" not in values:
        return DEFAULT_RULES
    try:
        return RuleTable.parse(values["rules"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _catalog(values: dict, default: Catalog = FULL_CATALOG) -> Catalog:
    if "catalog" not in values:
        return default
    try:
        return Catalog.parse(values["catalog"])
    except GenomeError as exc:
        raise UsageError(str(exc)) from exc


def _genome(values: dict):
    try:
        return parse_genome(_get(values, "genome"))
    except GenomeError as exc:
        raise UsageError(f"cannot decode genome: {exc}") from exc


def _agent_cfg(values: dict) -> AgentConfig:
    return AgentConfig(gamma=_get(values, "gamma", float, 0.8),
                       epsilon=_get(values, "epsilon", float, 0.05),
                       alpha=_get(values, "alpha", float, 1.0))


def _seeds(values: dict) -> tuple[int, ...]:
    seed = _get(values, "seed", int, 0)
    return tuple(seed + i for i in range(_get(values, "k_seeds", int, 3)))


def _emit(values: dict, kind: ExperimentKind, tables: dict[str, str], spec_kw: dict) -> None:
    if "no_files" in values:
        return
    spec = ExperimentSpec(kind, output=Path(values.get("output_dir", "results")), **spec_kw)
    out = write_outputs(spec, tables)
    log.info("wrote %s", out)


# ------------------------------------------------------------------ commands

def cmd_simulate(values: dict) -> str:
    sc = _scenario(values)
    result: SimResult = (run_pure_aloha(sc) if "aloha" in values
                         else run(_genome(values), sc, _rules(values)))
    row = result.to_csv_row() + "\n"
    return (SimResult.csv_header() + "\n" + row) if "header" in values else row


def cmd_validate(values: dict) -> str:
    return str(validate(_genome(values), _rules(values))) + "\n"


def cmd_sweep(values: dict) -> str:
    sc = _scenario(values)
    catalog = _catalog(values)
    res = exhaustive_sweep(sc, _get(values, "k_seeds", int, 3), catalog, _rules(values),
                           jobs=_get(values, "jobs", int, 1))
    text = res.to_csv()
    _emit(values, ExperimentKind.SWEEP, {"ranking": text},
          dict(scenarios=(values.get("scenario", "custom"),), seeds=res.seeds, catalog=catalog))
    return text


def cmd_train(values: dict) -> str:
    sc = _scenario(values)
    cfg = _agent_cfg(values)
    rules = _rules(values)
    episodes = _get(values, "episodes", int, 60)
    seed = _get(values, "seed", int, 0)
    agent = values.get("agent", "tabular")
    catalog = _catalog(values, ALOHA_CATALOG if agent == "tabular" else FULL_CATALOG)
    k = _get(values, "k_seeds", int, 3)
    sweep = exhaustive_sweep(sc.replace(duration=cfg.sim_seconds_per_step), k, catalog, rules)
    tables = {"sweep": sweep.to_csv()}
    if agent == "dqn":
        env = make_env(sweep, catalog, rules, cfg)
        learner = DqnLearner(DqnConfig(gamma=cfg.gamma), seed=seed,
                             widths=(8 + cfg.history_len, 64, 64, 64, env.n_actions))
        state = AgentState(catalog.base, cfg.history_len)
        rng = np.random.default_rng(seed)
        lines = ["episode,goal_visits,mean_reward"]
        for e in range(episodes):
            st = run_dqn_episode(env, learner, cfg, sweep.goal, rng, state)
            lines.append(f"{e + 1},{st.goal_visits},{st.mean_reward!r}")
        if "no_files" not in values:
            tables["episodes"] = "\n".join(lines) + "\n"
            spec = ExperimentSpec(ExperimentKind.CONVERGENCE, agent=cfg, catalog=catalog,
                                  seeds=(seed,), output=Path(values.get("output_dir", "results")),
                                  options={"agent": "dqn", "scenario": sc.name})
            out = write_outputs(spec, tables)
            learner.net.save(out / "weights.bin")
        return "\n".join(lines) + "\n"
    env = make_env(sweep, catalog, rules, cfg)
    q = None
    warm = values.get("warm_from")
    if warm:
        src = Scenario.preset(int(warm)).replace(duration=cfg.sim_seconds_per_step)
        src_sweep = exhaustive_sweep(src, k, catalog, rules)
        q, _ = train(make_env(src_sweep, catalog, rules, cfg), src_sweep.goal, cfg, episodes,
                     seed=10_000 + seed)
        q = warm_start(q, env.n_actions)
    q, visits = train(env, sweep.goal, cfg, episodes, seed, q=q)
    text = series_csv(["episode", "goal_visits"], [(e + 1, v) for e, v in enumerate(visits)])
    tables.update(episodes=text, qtable=q.to_csv())
    _emit(values, ExperimentKind.CONVERGENCE, tables,
          dict(seeds=(seed,), agent=cfg, catalog=catalog,
               options={"scenario": sc.name, "goal": sweep.goal, "warm_from": warm or ""}))
    return text


def cmd_compare_aloha(values: dict) -> str:
    seeds = _seeds(values)
    cfg = _agent_cfg(values)
    rows = aloha_comparison(seeds, cfg=cfg, episodes=_get(values, "episodes", int, 60),
                            train_seed=seeds[0], rules=_rules(values))
    text = rows_to_csv(rows, "aloha")
    _emit(values, ExperimentKind.ALOHA_COMPARE, {"aloha_comparison": text},
          dict(scenarios=tuple(range(1, 9)), seeds=seeds, agent=cfg, catalog=ALOHA_CATALOG))
    return text


def cmd_compare_dcf(values: dict) -> str:
    seeds = _seeds(values)
    cfg = _agent_cfg(values)
    ramp = values.get("ramp", "low")
    rows = dcf_comparison(ramp, seeds, cfg, _get(values, "episodes", int, 60), seeds[0],
                          _catalog(values), _rules(values))
    text = rows_to_csv(rows, "dcf")
    log.info("mean uplift over DCF on the %s ramp: %.2f%%", ramp, 100 * mean_uplift(rows))
    _emit(values, ExperimentKind.DCF_COMPARE, {f"dcf_{ramp}_ramp": text},
          dict(seeds=seeds, agent=cfg, options={"ramp": ramp}))
    return text


def cmd_blocks_report(values: dict) -> str:
    cfg = _agent_cfg(values)
    reps = _get(values, "repetitions", int, 20)
    seed = _get(values, "seed", int, 0)
    report = block_selection_report(range(1, 9), reps, cfg, _get(values, "episodes", int, 60),
                                    _catalog(values), _rules(values),
                                    eval_seeds=(seed, seed + 1, seed + 2))
    text = report.table_csv()
    _emit(values, ExperimentKind.BLOCK_REPORT,
          {"block_table": text, "block_frequencies": report.frequencies_csv()},
          dict(scenarios=tuple(range(1, 9)), repetitions=reps, agent=cfg))
    return text


def cmd_gradcheck(values: dict) -> str:
    seed = _get(values, "seed", int, 0)
    lines = ["seed,max_relative_error"]
    for s in range(seed, seed + _get(values, "count", int, 10)):
        mlp = Mlp.init((23, 8, 8, 8, 22), seed=s)
        rng = np.random.default_rng(s + 1_000_003)
        err = gradient_check(mlp, rng.normal(size=23), rng.normal(size=22))
        lines.append(f"{s},{err!r}")
    return "\n".join(lines) + "\n"


COMMANDS = {
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "sweep": cmd_sweep,
    "train": cmd_train,
    "compare-aloha": cmd_compare_aloha,
    "compare-dcf": cmd_compare_dcf,
    "blocks-report": cmd_blocks_report,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        values = _settings(args)
        sys.stdout.write(COMMANDS[args.command](values))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

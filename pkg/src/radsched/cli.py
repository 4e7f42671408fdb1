"""Command-line front end.

Subcommands tie the generator, the simulator, the comparison statistics and
the model exporter into reproducible experiment runs.  Every run writes a
manifest next to its outputs so any artifact can be regenerated.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .datagen import GeneratorConfig, InvalidConfig, generate_instance
from .domain import DomainError
from .instance_io import DataError, load_instance, write_instance
from .model import build_full_model, export_lp
from .simulate import (
    PolicyConfig,
    PolicyError,
    parse_outcome_summary,
    render_outcome,
    replay_until,
    run_simulation,
)
from .solver import SolveBudget
from . import stats

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(DomainError):
    pass


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Config and policy parsing


_CONFIG_FIELD_TYPES = {
    "instances": int,
    "span_months": int,
    "warmup_months": int,
    "mean_weekday_arrivals": float,
    "urgent_single_fraction": float,
    "urgent_five_per_week": float,
    "routine_multiple_of_five": float,
    "session_minutes": int,
    "first_session_extra_minutes": int,
    "palliative_early_fraction": float,
    "same_week_fraction": float,
    "doctor_fraction": float,
}


def load_config(path: Optional[str]) -> GeneratorConfig:
    """Generator config from a line-oriented key=value file.

    Blank lines and lines starting with '#' are ignored.  Only scalar
    fields can be overridden; table-valued fields keep their defaults.
    """
    if path is None:
        return GeneratorConfig()
    overrides: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_FIELD_TYPES:
            raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            overrides[key] = _CONFIG_FIELD_TYPES[key](value.strip())
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    config = GeneratorConfig(**overrides)
    try:
        config.validate()
    except InvalidConfig as exc:
        raise DataError(str(exc)) from exc
    return config


def parse_policy(text: str) -> PolicyConfig:
    """Policy from a 'scd=U,R mnda=U,R' string; 'inf' means unlimited."""
    parts: dict[str, str] = {}
    for token in text.replace(";", " ").split():
        if "=" not in token:
            raise UsageError(f"bad policy token {token!r}")
        key, _, value = token.partition("=")
        parts[key] = value

    def pair(key: str, default: str) -> tuple[str, str]:
        raw = parts.pop(key, default)
        fields = raw.split(",")
        if len(fields) != 2:
            raise UsageError(f"{key} needs two comma-separated values")
        return fields[0], fields[1]

    scd_u, scd_r = pair("scd", "5,5")
    mnda_u, mnda_r = pair("mnda", "inf,inf")
    if parts:
        raise UsageError(f"unknown policy keys {sorted(parts)}")

    def mnda_value(raw: str) -> Optional[int]:
        return None if raw in ("inf", "-") else int(raw)

    try:
        return PolicyConfig.from_counts(
            scd_urgent=int(scd_u), scd_routine=int(scd_r),
            mnda_urgent=mnda_value(mnda_u), mnda_routine=mnda_value(mnda_r))
    except (ValueError, PolicyError) as exc:
        raise UsageError(f"bad policy {text!r}: {exc}") from exc


def policy_slug(policy: PolicyConfig) -> str:
    """Filesystem-safe form of the policy label."""
    return (policy.label().replace(" ", "_").replace("=", "")
            .replace(",", "-"))


# ---------------------------------------------------------------------------
# Manifest


@dataclasses.dataclass
class RunManifest:
    command: str
    seed: int
    out_dir: str
    config_path: Optional[str] = None
    policies: tuple[str, ...] = ()
    budget_secs: float = 0.0
    node_budget: Optional[int] = None
    version: str = __version__

    def render(self) -> str:
        lines = [
            f"command={self.command}",
            f"version={self.version}",
            f"seed={self.seed}",
            f"out={self.out_dir}",
        ]
        if self.config_path is not None:
            lines.append(f"config={self.config_path}")
        for policy in self.policies:
            lines.append(f"policy={policy}")
        if self.budget_secs:
            lines.append(f"budget_secs={self.budget_secs}")
        if self.node_budget is not None:
            lines.append(f"node_budget={self.node_budget}")
        return "\n".join(lines) + "\n"

    def write(self) -> None:
        _atomic_write(Path(self.out_dir) / "manifest.txt", self.render())


# ---------------------------------------------------------------------------
# generate


def _generate_one(args: tuple) -> str:
    config, seed, index, out_dir = args
    instance = generate_instance(config, seed, index)
    path = Path(out_dir) / f"{instance.id}.inst"
    _atomic_write(path, write_instance(instance))
    return str(path)


def cmd_generate(ns: argparse.Namespace) -> int:
    config = load_config(ns.config)
    if ns.instances is not None:
        config = dataclasses.replace(config, instances=ns.instances)
        config.validate()
    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(config, ns.seed, idx, str(out_dir))
            for idx in range(config.instances)]
    if ns.jobs > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            paths = list(pool.map(_generate_one, jobs))
    else:
        paths = [_generate_one(job) for job in jobs]
    RunManifest("generate", ns.seed, str(out_dir), ns.config).write()
    print(f"wrote {len(paths)} instance files to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _simulate_one(args: tuple) -> str:
    instance_path, policy_text, budget, seed, out_dir = args
    policy = parse_policy(policy_text)
    instance = load_instance(instance_path)
    outcome = run_simulation(instance, policy, budget, seed=seed)
    path = Path(out_dir) / f"{instance.id}.outcome"
    _atomic_write(path, render_outcome(outcome))
    return str(path)


def cmd_simulate(ns: argparse.Namespace) -> int:
    policies = ns.policy or ["scd=5,5 mnda=inf,inf"]
    budget = SolveBudget(total_seconds=ns.budget_secs,
                         node_limit=ns.node_budget)
    out_root = Path(ns.out)
    jobs = []
    for policy_text in policies:
        policy = parse_policy(policy_text)  # validate before any work
        out_dir = out_root / policy_slug(policy)
        out_dir.mkdir(parents=True, exist_ok=True)
        for instance_path in ns.instances:
            jobs.append((instance_path, policy_text, budget, ns.seed,
                         str(out_dir)))
    if ns.jobs > 1:
        with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
            paths = list(pool.map(_simulate_one, jobs))
    else:
        paths = [_simulate_one(job) for job in jobs]
    RunManifest("simulate", ns.seed, str(out_root), None, tuple(policies),
                ns.budget_secs, ns.node_budget).write()
    print(f"wrote {len(paths)} outcome files to {out_root}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare


def _read_config_results(out_dir: str) -> stats.ConfigResults:
    rows = []
    label = None
    for path in sorted(Path(out_dir).glob("*.outcome")):
        iid, plabel, agg = parse_outcome_summary(
            path.read_text(encoding="utf-8"))
        if label is None:
            label = plabel
        elif label != plabel:
            raise DataError(f"{out_dir}: mixed policy labels in outcome files")
        rows.append((iid, agg))
    if not rows:
        raise DataError(f"{out_dir}: no outcome files")
    rows.sort(key=lambda r: r[0])
    return stats.ConfigResults(
        label=label,
        instance_ids=tuple(iid for iid, _ in rows),
        values={
            "breach": tuple(a.breach_pct for _, a in rows),
            "jmax": tuple(a.jmax_pct for _, a in rows),
            "jgood": tuple(a.jgood_pct for _, a in rows),
            "waiting": tuple(a.waiting for _, a in rows),
        })


def cmd_compare(ns: argparse.Namespace) -> int:
    configs = [_read_config_results(d) for d in ns.outcome_dirs]
    ids = configs[0].instance_ids
    for config in configs[1:]:
        if config.instance_ids != ids:
            raise DataError("outcome directories cover different instances")
    comparisons = {}
    marks = {}
    for criterion in stats.CRITERIA:
        comp = stats.compare_all(
            configs, criterion, alpha_overall=ns.alpha,
            replications=ns.replications, seed=ns.seed,
            corrected=not ns.uncorrected)
        comparisons[criterion] = comp
        marks[criterion] = comp.marked
    table = stats.render_table(configs, marks)
    report = stats.write_report(configs, comparisons)
    if ns.out:
        out_dir = Path(ns.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(out_dir / "report.tsv", report)
        _atomic_write(out_dir / "table.txt", table)
        RunManifest("compare", ns.seed, str(out_dir)).write()
    print(table, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# export-lp


def cmd_export_lp(ns: argparse.Namespace) -> int:
    instance = load_instance(ns.instance)
    policy = parse_policy(ns.policy)
    budget = SolveBudget(total_seconds=ns.budget_secs,
                         node_limit=ns.node_budget)
    ledger, batch, cal = replay_until(instance, policy, budget, ns.day)
    if not batch:
        text = f"\\ no batch on day {ns.day}\nMinimize\n obj:\nEnd\n"
    else:
        from .solver import constructive_schedule, compute_horizon
        constructive = constructive_schedule(batch, ledger, cal)
        last = compute_horizon(constructive, batch, cal)
        model = build_full_model(batch, ledger,
                                 cal.with_horizon(cal.first_day, last))
        text = export_lp(model, ns.objective)
    if ns.out:
        _atomic_write(Path(ns.out), text)
    else:
        print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit with code 1
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="radsched",
                     description="Radiotherapy scheduling experiments")
    parser.add_argument("--version", action="version",
                        version=f"radsched {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write synthetic instance files")
    gen.add_argument("--config", help="key=value generator config file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--instances", type=int, help="override instance count")
    gen.add_argument("--jobs", type=int, default=1)
    gen.set_defaults(func=cmd_generate)

    sim = sub.add_parser("simulate", help="run the booking simulation")
    sim.add_argument("instances", nargs="+", help="instance files")
    sim.add_argument("--policy", action="append",
                     help="'scd=U,R mnda=U,R' (repeatable)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--budget-secs", type=float, default=10.0)
    sim.add_argument("--node-budget", type=int,
                     help="per-stage node limit (reproducible runs)")
    sim.add_argument("--jobs", type=int, default=1)
    sim.set_defaults(func=cmd_simulate)

    cmp_ = sub.add_parser("compare", help="compare outcome directories")
    cmp_.add_argument("outcome_dirs", nargs="+",
                      help="one directory per policy configuration")
    cmp_.add_argument("--alpha", type=float, default=0.10,
                      help="overall significance level")
    cmp_.add_argument("--replications", type=int, default=1000)
    cmp_.add_argument("--seed", type=int, default=0)
    cmp_.add_argument("--uncorrected", action="store_true",
                      help="skip the family-wise correction")
    cmp_.add_argument("--out", help="directory for report files")
    cmp_.set_defaults(func=cmd_compare)

    exp = sub.add_parser("export-lp", help="export one day's batch model")
    exp.add_argument("instance", help="instance file")
    exp.add_argument("--day", type=int, required=True)
    exp.add_argument("--policy", default="scd=5,5 mnda=inf,inf")
    exp.add_argument("--objective", type=int, default=1, choices=(1, 2, 3, 4))
    exp.add_argument("--budget-secs", type=float, default=10.0)
    exp.add_argument("--node-budget", type=int)
    exp.add_argument("--out", help="output file (stdout if omitted)")
    exp.set_defaults(func=cmd_export_lp)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except UsageError as exc:
        print(f"radsched: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"radsched: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DomainError as exc:
        print(f"radsched: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

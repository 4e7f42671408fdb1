"""Nonparametric comparison of policy configurations.

Per criterion, configurations are compared pairwise with a Mann-Whitney U
test applied to bootstrap resamples of the per-instance results; a
configuration is marked best when no other configuration is significantly
better at the family-corrected level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .domain import DomainError

CRITERIA = ("breach", "jmax", "jgood", "waiting")

# Sample size from which the normal approximation is used.
NORMAL_APPROX_MIN_N = 8


class StatsError(DomainError):
    pass


class EmptySample(StatsError):
    pass


def _fractional_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2 + 1
        for idx in order[i:j + 1]:
            ranks[idx] = rank
        i = j + 1
    return ranks


def _u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    ranks = _fractional_ranks(list(a) + list(b))
    rank_sum_a = sum(ranks[:len(a)])
    return rank_sum_a - len(a) * (len(a) + 1) / 2


def _exact_p(a: Sequence[float], b: Sequence[float], u_obs: float) -> float:
    pooled = list(a) + list(b)
    ranks = _fractional_ranks(pooled)
    n_a = len(a)
    offset = n_a * (n_a + 1) / 2
    lower = higher = total = 0
    eps = 1e-9
    for subset in combinations(range(len(pooled)), n_a):
        u = sum(ranks[i] for i in subset) - offset
        total += 1
        if u <= u_obs + eps:
            lower += 1
        if u >= u_obs - eps:
            higher += 1
    return min(1.0, 2 * min(lower, higher) / total)


def _normal_p(a: Sequence[float], b: Sequence[float], u_obs: float) -> float:
    n_a, n_b = len(a), len(b)
    n = n_a + n_b
    pooled = sorted(list(a) + list(b))
    tie_term = 0.0
    i = 0
    while i < n:
        j = i
        while j + 1 < n and pooled[j + 1] == pooled[i]:
            j += 1
        t = j - i + 1
        tie_term += t ** 3 - t
        i = j + 1
    var = n_a * n_b / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0
    mean = n_a * n_b / 2
    shift = abs(u_obs - mean)
    z = max(0.0, shift - 0.5) / math.sqrt(var)  # continuity correction
    return min(1.0, math.erfc(z / math.sqrt(2)))


def mww_u(sample_a: Sequence[float], sample_b: Sequence[float]
          ) -> tuple[float, float]:
    """Mann-Whitney U for the first sample and the two-sided p-value.

    Uses exact enumeration of the rank permutations for small samples and
    the tie-corrected normal approximation from ``NORMAL_APPROX_MIN_N``.
    """
    if not len(sample_a) or not len(sample_b):
        raise EmptySample("both samples must be nonempty")
    u = _u_statistic(sample_a, sample_b)
    if max(len(sample_a), len(sample_b)) < NORMAL_APPROX_MIN_N:
        return u, _exact_p(sample_a, sample_b, u)
    return u, _normal_p(sample_a, sample_b, u)


@dataclass(frozen=True)
class ConfigResults:
    """Per-instance aggregates of one policy configuration."""

    label: str
    instance_ids: tuple[str, ...]
    values: dict  # criterion -> tuple of per-instance values

    def __post_init__(self) -> None:
        for criterion in CRITERIA:
            if criterion not in self.values:
                raise StatsError(f"{self.label}: missing criterion {criterion}")
            if len(self.values[criterion]) != len(self.instance_ids):
                raise StatsError(f"{self.label}: ragged results")

    def mean(self, criterion: str) -> float:
        vals = self.values[criterion]
        return sum(vals) / len(vals)


@dataclass(frozen=True)
class Verdict:
    """Outcome of one bootstrapped pairwise comparison (smaller is better)."""

    better: Optional[str]  # label of the significantly better config, or None
    median_p: float
    alpha: float
    method: str
    replications: int


def bootstrap_compare(a: ConfigResults, b: ConfigResults, criterion: str,
                      replications: int = 1000, seed: int = 0,
                      alpha: float = 0.05, method: str = "median-p") -> Verdict:
    """Compare two configurations on one criterion.

    Each replication resamples the paired instance indices with replacement
    and applies the U test to the resampled values; replicate seeds are
    derived from the master seed by replicate index.
    """
    if a.instance_ids != b.instance_ids:
        raise StatsError("configurations were run on different instance sets")
    if replications < 1:
        raise StatsError("need at least one replication")
    xs = np.asarray(a.values[criterion], dtype=float)
    ys = np.asarray(b.values[criterion], dtype=float)
    n = len(xs)
    half = n * n / 2
    p_values = []
    u_values = []
    for rep in range(replications):
        rng = np.random.default_rng([seed, rep])
        idx = rng.integers(0, n, n)
        u, p = mww_u(xs[idx], ys[idx])
        p_values.append(p)
        u_values.append(u)
    median_p = float(np.median(p_values))
    median_u = float(np.median(u_values))
    better: Optional[str] = None
    if method == "median-p":
        if median_p < alpha and median_u != half:
            better = a.label if median_u < half else b.label
    elif method == "u-percentile":
        lo = float(np.quantile(u_values, alpha))
        hi = float(np.quantile(u_values, 1 - alpha))
        if hi < half:
            better = a.label
        elif lo > half:
            better = b.label
    else:
        raise StatsError(f"unknown comparison method: {method}")
    return Verdict(better, median_p, alpha, method, replications)


def _pair_seed(seed: int, label_a: str, label_b: str) -> int:
    # Stable across call order; labels are part of the derivation.
    h = 1469598103934665603
    for ch in f"{min(label_a, label_b)}|{max(label_a, label_b)}".encode():
        h = (h ^ ch) * 1099511628211 % (1 << 64)
    return (seed * 1000003 + h) % (1 << 31)


@dataclass
class Comparison:
    """mark_best working data, kept for the machine-readable report."""

    marked: set = field(default_factory=set)
    losses: dict = field(default_factory=dict)  # label -> configs beating it
    alpha_per_comparison: float = 0.0


def compare_all(configs: Sequence[ConfigResults], criterion: str,
                alpha_overall: float = 0.10, replications: int = 1000,
                seed: int = 0, corrected: bool = True,
                method: str = "median-p") -> Comparison:
    """Pairwise comparisons of every configuration on one criterion."""
    if len(configs) < 2:
        comp = Comparison(alpha_per_comparison=alpha_overall)
        comp.marked = {c.label for c in configs}
        comp.losses = {c.label: [] for c in configs}
        return comp
    n_pairs = len(configs) * (len(configs) - 1) // 2
    alpha = alpha_overall / n_pairs if corrected else alpha_overall
    comp = Comparison(alpha_per_comparison=alpha)
    comp.losses = {c.label: [] for c in configs}
    for a, b in combinations(configs, 2):
        verdict = bootstrap_compare(
            a, b, criterion, replications=replications,
            seed=_pair_seed(seed, a.label, b.label), alpha=alpha,
            method=method)
        if verdict.better == a.label:
            comp.losses[b.label].append(a.label)
        elif verdict.better == b.label:
            comp.losses[a.label].append(b.label)
    comp.marked = {label for label, beaten_by in comp.losses.items()
                   if not beaten_by}
    if not comp.marked:
        # Nontransitive verdicts can in principle beat everyone; fall back
        # to the configuration losing the fewest comparisons.
        by_label = {c.label: c for c in configs}
        best = min(configs,
                   key=lambda c: (len(comp.losses[c.label]),
                                  c.mean(criterion), c.label))
        comp.marked = {best.label}
        del by_label
    return comp


def mark_best(configs: Sequence[ConfigResults], criterion: str,
              alpha_overall: float = 0.10, replications: int = 1000,
              seed: int = 0, corrected: bool = True,
              method: str = "median-p") -> set:
    """Labels not significantly beaten by any other configuration."""
    return compare_all(configs, criterion, alpha_overall, replications,
                       seed, corrected, method).marked


_COLUMNS = (("breach", "Breach (%)", "{:.2f}"),
            ("jmax", "JMax (%)", "{:.2f}"),
            ("jgood", "JGood (%)", "{:.2f}"),
            ("waiting", "Waiting", "{:.0f}"))


def render_table(configs: Sequence[ConfigResults],
                 marks: Optional[dict] = None,
                 order: Optional[Sequence[str]] = None) -> str:
    """Text table in the report column order; ``*`` marks the best configs."""
    by_label = {c.label: c for c in configs}
    labels = list(order) if order is not None else [c.label for c in configs]
    header = ["Config"] + [title for _, title, _ in _COLUMNS]
    rows = [header]
    for label in labels:
        config = by_label[label]
        row = [label]
        for criterion, _, fmt in _COLUMNS:
            cell = fmt.format(config.mean(criterion))
            if marks and label in marks.get(criterion, ()):
                cell += "*"
            row.append(cell)
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for r, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c])
                               for c, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines) + "\n"


def write_report(configs: Sequence[ConfigResults],
                 comparisons: dict) -> str:
    """Machine-readable comparison report (tab-separated).

    ``comparisons`` maps criterion -> Comparison as built by compare_all.
    """
    lines = ["config\tcriterion\tmean\tbest\tcomparisons_lost"]
    for config in configs:
        for criterion in CRITERIA:
            comp = comparisons[criterion]
            best = "1" if config.label in comp.marked else "0"
            lost = len(comp.losses.get(config.label, []))
            lines.append(f"{config.label}\t{criterion}\t"
                         f"{config.mean(criterion):.6f}\t{best}\t{lost}")
    return "\n".join(lines) + "\n"

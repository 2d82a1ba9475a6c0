"""Warning/smell correlation and co-occurrence analyses.

Every family of tests (normality gate, correlation matrix, H2 and H3
batteries) is adjusted with a single Benjamini-Hochberg pass over the whole
family.  Tests that cannot be computed are kept as entries with a ``note``
rather than dropped silently.
"""

from __future__ import annotations

import dataclasses
import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence

from .errors import AllZeroDifferences, ConstantInput, ConstantSample, GroupTooSmall, InsufficientData
from .model import PackageProfile, RuleKey, rule_keys, rule_sort_key
from .npstats import (
    DEFAULT_ALPHA,
    AdjustedOutcome,
    TestOutcome,
    anderson_darling,
    bh_adjust,
    quartiles,
    spearman_rho,
    wilcoxon_signed_rank,
)
from .records import ALL_COMBOS, SMELL_ORDER, TOOL_ORDER, SmellCombo, SmellKind, SourceTool

log = logging.getLogger(__name__)

MIN_PAIRS = 5
PAIRING_NOTE = "pairs are rank-matched on total warning load (quantile-spaced subsample of the larger group)"


@dataclass(frozen=True)
class Skipped:
    what: str
    reason: str


def _note_skip(skipped: Optional[list], what: str, reason: str) -> None:
    log.debug("skipped %s: %s", what, reason)
    if skipped is not None:
        skipped.append(Skipped(what, reason))


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- RQ1: correlation ------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationCell:
    tool: SourceTool
    rule_id: str
    smell: SmellKind
    test: TestOutcome
    adjusted: AdjustedOutcome
    n_packages: int

    @property
    def rho(self) -> float:
        return self.test.statistic


def correlation_matrix(
    profiles: Sequence[PackageProfile],
    alpha: float = DEFAULT_ALPHA,
    skipped: Optional[list] = None,
    jobs: int = 1,
) -> list[CorrelationCell]:
    """Spearman rho between per-package rule counts and smell instance counts.

    One test per (rule, smell kind); pairs where either vector is constant
    are skipped.  Cells come back sorted by tool, rule and smell.
    """
    if len(profiles) < 3:
        raise InsufficientData(f"correlation needs at least 3 packages, got {len(profiles)}")
    ordered = sorted(profiles, key=lambda p: p.package)
    smell_vectors = {s: [p.smell_count(s) for p in ordered] for s in SMELL_ORDER}
    tasks = [(key, s) for key in rule_keys(ordered) for s in SMELL_ORDER]

    def run(task):
        (tool, rule), smell = task
        x = [p.count(tool, rule) for p in ordered]
        try:
            return spearman_rho(x, smell_vectors[smell])
        except ConstantInput as exc:
            return exc

    results = _pmap(run, tasks, jobs)
    kept = []
    for ((tool, rule), smell), res in zip(tasks, results):
        if isinstance(res, Exception):
            _note_skip(skipped, f"{tool.value}:{rule} ~ {smell.value}", str(res))
        else:
            kept.append((tool, rule, smell, res))
    if not kept:
        return []
    adjusted = bh_adjust([t.p_value for *_, t in kept], alpha)
    n = len(ordered)
    return [CorrelationCell(tool, rule, smell, t, adj, n) for (tool, rule, smell, t), adj in zip(kept, adjusted)]


def top_quartile_warnings(
    cells: Iterable[CorrelationCell], skipped: Optional[list] = None
) -> dict[tuple[SourceTool, SmellKind], list[str]]:
    """Rules with rho >= Q3 of their (tool, smell) group, best first."""
    groups: dict[tuple[SourceTool, SmellKind], list[CorrelationCell]] = defaultdict(list)
    for c in cells:
        groups[(c.tool, c.smell)].append(c)
    selected = {}
    for key in sorted(groups, key=lambda k: (TOOL_ORDER.index(k[0]), SMELL_ORDER.index(k[1]))):
        group = groups[key]
        if len(group) < 4:
            exc = GroupTooSmall(f"{len(group)} cells; a quartile needs at least 4")
            _note_skip(skipped, f"{key[0].value} ~ {key[1].value}", str(exc))
            continue
        q3 = quartiles([c.rho for c in group])[2]
        top = [c for c in group if c.rho >= q3]
        selected[key] = [c.rule_id for c in sorted(top, key=lambda c: (-c.rho, c.rule_id))]
    return selected


# -- RQ2: co-occurrence -------------------------------------------------------------


@dataclass
class CooccurrenceTable:
    """Warning instances per (tool, rule, smell combination of their package)."""

    counts: dict = dataclasses.field(default_factory=dict)  # (SourceTool, rule_id, SmellCombo) -> int

    def rule_keys(self) -> list[RuleKey]:
        return sorted({(t, r) for t, r, _ in self.counts}, key=rule_sort_key)

    def tools(self) -> list[SourceTool]:
        present = {t for t, _, _ in self.counts}
        return [t for t in TOOL_ORDER if t in present]

    def combos(self) -> list[SmellCombo]:
        present = {c for _, _, c in self.counts}
        return [c for c in ALL_COMBOS if c in present]

    def count(self, tool: SourceTool, rule_id: str, combo: SmellCombo) -> int:
        return self.counts.get((tool, rule_id, combo), 0)

    def rule_total(self, tool: SourceTool, rule_id: str) -> int:
        return sum(c for (t, r, _), c in self.counts.items() if t == tool and r == rule_id)

    def total(self) -> int:
        return sum(self.counts.values())

    def combo_total(self, combo: SmellCombo, tool: Optional[SourceTool] = None) -> int:
        return sum(c for (t, _, k), c in self.counts.items() if k == combo and (tool is None or t == tool))

    def rows(self) -> list[tuple[SourceTool, str, SmellCombo, int]]:
        return sorted(
            ((t, r, k, c) for (t, r, k), c in self.counts.items()),
            key=lambda row: (TOOL_ORDER.index(row[0]), row[1], row[2].sort_index),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, CooccurrenceTable):
            return NotImplemented
        return {k: v for k, v in self.counts.items() if v} == {k: v for k, v in other.counts.items() if v}


def cooccurrence_table(profiles: Iterable[PackageProfile]) -> CooccurrenceTable:
    counts: Counter = Counter()
    for p in profiles:
        combo = p.combo
        for (tool, rule), c in p.warning_counts.items():
            if c:
                counts[(tool, rule, combo)] += c
    return CooccurrenceTable(dict(counts))


def nco_fraction(table: CooccurrenceTable) -> float:
    """Share of warning instances located in smell-free packages."""
    total = table.total()
    if total == 0:
        return 0.0
    return table.combo_total(SmellCombo()) / total


@dataclass(frozen=True)
class PScore:
    tool: SourceTool
    rule_id: str
    combo: SmellCombo
    p: float
    count: int
    denominator: int


def p_scores(table: CooccurrenceTable, skipped: Optional[list] = None) -> list[PScore]:
    """Relative frequency of each rule among its tool's instances within a combo."""
    scores = []
    for tool in TOOL_ORDER:
        for combo in ALL_COMBOS:
            rules = [(r, c) for (t, r, k), c in table.counts.items() if t == tool and k == combo and c > 0]
            denominator = sum(c for _, c in rules)
            if denominator == 0:
                if tool in table.tools():
                    _note_skip(skipped, f"P({tool.value}, {combo.label})", "no instances of this tool in combo")
                continue
            for rule, c in sorted(rules, key=lambda rc: (-rc[1], rc[0])):
                scores.append(PScore(tool, rule, combo, c / denominator, c, denominator))
    return scores


# -- test batteries ---------------------------------------------------------------


@dataclass(frozen=True)
class BatteryEntry:
    family: str
    subject: str
    left: str
    right: str
    n_pairs: int
    test: Optional[TestOutcome] = None
    adjusted: Optional[AdjustedOutcome] = None
    note: str = ""

    @property
    def testable(self) -> bool:
        return self.test is not None

    @property
    def rejected(self) -> bool:
        return bool(self.adjusted and self.adjusted.rejected)


def adjust_battery(entries: list[BatteryEntry], alpha: float) -> list[BatteryEntry]:
    """One BH pass over all testable entries of a battery."""
    testable = [i for i, e in enumerate(entries) if e.test is not None]
    if not testable:
        return entries
    adjusted = bh_adjust([entries[i].test.p_value for i in testable], alpha)  # type: ignore[union-attr]
    out = list(entries)
    for i, adj in zip(testable, adjusted):
        out[i] = dataclasses.replace(out[i], adjusted=adj)
    return out


def rank_matched(left: Sequence, right: Sequence) -> tuple[list, list]:
    """Equal-length pairing of two already-sorted groups.

    The smaller group is used whole; the larger one is subsampled at evenly
    spaced rank positions so both sides cover the same quantiles.
    """
    m = min(len(left), len(right))
    if m == 0:
        return [], []

    def pick(group):
        if len(group) == m:
            return list(group)
        step = len(group) / m
        return [group[min(len(group) - 1, int((i + 0.5) * step))] for i in range(m)]

    return pick(left), pick(right)


def paired_entry(family, subject, left, right, xs, ys, min_pairs) -> BatteryEntry:
    n = len(xs)
    if n < min_pairs:
        return BatteryEntry(family, subject, left, right, n, note=f"insufficient data: {n} < {min_pairs} pairs")
    try:
        test = wilcoxon_signed_rank(xs, ys)
    except AllZeroDifferences:
        return BatteryEntry(family, subject, left, right, n, note="not testable: all paired differences are zero")
    return BatteryEntry(family, subject, left, right, n, test)


def _load_key(p: PackageProfile):
    return p.total_warnings, p.package


def h2_groups(profiles: Sequence[PackageProfile], axis: str = "smell") -> dict[str, list[PackageProfile]]:
    """Packages per smell kind (presence) or per smell combination, load-sorted."""
    if axis == "smell":
        groups = {s.value: [p for p in profiles if s in p.smells_present] for s in SMELL_ORDER}
    elif axis == "combo":
        groups = {c.label: [p for p in profiles if p.combo == c] for c in ALL_COMBOS}
    else:
        raise ValueError(f"unknown H2 axis {axis!r}")
    return {k: sorted(v, key=_load_key) for k, v in groups.items()}


def h2_battery(
    table: CooccurrenceTable,
    profiles: Sequence[PackageProfile],
    alpha: float = DEFAULT_ALPHA,
    axis: str = "smell",
    min_pairs: int = MIN_PAIRS,
) -> list[BatteryEntry]:
    """Does rule w co-occur differently with smell s than with smell s'?

    For each rule and unordered pair of groups, the rule's per-package counts
    in the two groups are paired by load rank and compared with the Wilcoxon
    signed-rank test.
    """
    groups = h2_groups(profiles, axis)
    labels = [k for k in groups]
    entries = []
    for tool, rule in table.rule_keys():
        subject = f"{tool.value}:{rule}"
        for a, b in combinations(labels, 2):
            ga, gb = rank_matched(groups[a], groups[b])
            xs = [p.count(tool, rule) for p in ga]
            ys = [p.count(tool, rule) for p in gb]
            entries.append(paired_entry("H2", subject, a, b, xs, ys, min_pairs))
    return adjust_battery(entries, alpha)


def h3_battery(table: CooccurrenceTable, alpha: float = DEFAULT_ALPHA, min_pairs: int = MIN_PAIRS) -> list[BatteryEntry]:
    """Do two tools' rules co-occur differently with a smell combination?

    Per tool, each rule contributes the share of its instances that fall in
    the combination; rules are ordered by total instances and the two tools'
    vectors are rank-matched.
    """
    by_tool: dict[SourceTool, list[str]] = defaultdict(list)
    for tool, rule in table.rule_keys():
        by_tool[tool].append(rule)
    totals = {(t, r): table.rule_total(t, r) for t, rules in by_tool.items() for r in rules}
    for t in by_tool:
        by_tool[t].sort(key=lambda r: (-totals[(t, r)], r))
    entries = []
    for ta, tb in combinations(table.tools(), 2):
        ra, rb = rank_matched(by_tool[ta], by_tool[tb])
        for combo in table.combos():
            xs = [table.count(ta, r, combo) / totals[(ta, r)] for r in ra]
            ys = [table.count(tb, r, combo) / totals[(tb, r)] for r in rb]
            entries.append(paired_entry("H3", combo.label, ta.value, tb.value, xs, ys, min_pairs))
    return adjust_battery(entries, alpha)


def normality_gate(profiles: Sequence[PackageProfile], alpha: float = DEFAULT_ALPHA) -> list[BatteryEntry]:
    """Anderson-Darling test on every per-package rule count and smell count vector."""
    ordered = sorted(profiles, key=lambda p: p.package)
    variables = [(f"{t.value}:{r}", [p.count(t, r) for p in ordered]) for t, r in rule_keys(ordered)]
    variables += [(s.value, [p.smell_count(s) for p in ordered]) for s in SMELL_ORDER]
    entries = []
    for name, values in variables:
        try:
            test = anderson_darling(values)
            entries.append(BatteryEntry("HN", name, "", "", len(values), test))
        except InsufficientData as exc:
            entries.append(BatteryEntry("HN", name, "", "", len(values), note=f"insufficient data: {exc}"))
        except ConstantSample:
            entries.append(BatteryEntry("HN", name, "", "", len(values), note="not testable: constant vector"))
    return adjust_battery(entries, alpha)

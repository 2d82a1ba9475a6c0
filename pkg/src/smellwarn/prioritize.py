"""Warning rankers, effort-capture curves and the ranker comparison battery.

Three rankers order the same warnings: by normalized warning severity, by
the warning's relative frequency P within one smell combination, and by the
severity of the smells in the warning's package (the optimal order).  Each
ranking is scored by how many Medium, High and Critical smell-prone warnings
its first x% captures, x = 10, 20, ..., 100, and by a Popt-style area.
"""

from __future__ import annotations

import warnings as _warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .analysis import BatteryEntry, PScore, adjust_battery, paired_entry
from .errors import DegenerateCaseWarning, EmptyRanking, InsufficientData, UnknownCombo, UnresolvablePackage
from .model import PackageProfile, warning_package
from .npstats import DEFAULT_ALPHA
from .records import NCO, TOOL_ORDER, SmellCombo, SourceTool, WarningRecord

BUCKETS = ("Critical", "High", "Medium")
BUCKET_WEIGHT = {"Critical": 9, "High": 7, "Medium": 5, "None": 0}
CUTOFFS = tuple(range(10, 101, 10))


def bucket_of(combo: SmellCombo) -> str:
    """Smell-proneness bucket from the most severe smell in the combination."""
    severity = combo.severity
    if severity >= 9:
        return "Critical"
    if severity >= 7:
        return "High"
    if severity >= 5:
        return "Medium"
    return "None"


@dataclass(frozen=True)
class WarningInstance:
    """A warning (or a whole rule, for rule-level ranking) placed in its package's combo."""

    tool: SourceTool
    rule_id: str
    severity: int
    combo: SmellCombo
    package: str = ""
    location: str = ""


@dataclass(frozen=True)
class RankedWarning:
    tool: SourceTool
    rule_id: str
    key: float
    bucket: str
    severity: int = 0
    package: str = ""
    location: str = ""

    @property
    def weight(self) -> int:
        return BUCKET_WEIGHT[self.bucket]


def instances_from(
    warnings: Iterable[WarningRecord],
    profiles: Iterable[PackageProfile],
    source_roots: Sequence[str] = (),
    class_uppercase: bool = True,
    tools: Optional[Iterable[SourceTool]] = None,
) -> list[WarningInstance]:
    """Attach each warning to the smell combination of its package; unresolvable ones are dropped."""
    combos = {p.package: p.combo for p in profiles}
    keep = set(tools) if tools is not None else None
    out = []
    for w in warnings:
        if keep is not None and w.tool not in keep:
            continue
        try:
            pkg = warning_package(w, source_roots, class_uppercase)
        except UnresolvablePackage:
            continue
        location = f"{w.file_path or w.fq_class}:{w.line or 0}"
        out.append(WarningInstance(w.tool, w.rule_id, w.severity, combos.get(pkg, NCO), pkg, location))
    return out


def ranking_units(instances: Sequence[WarningInstance], unit: str = "instance") -> list[WarningInstance]:
    """Instances unchanged, or one unit per rule carrying its dominant combination."""
    if unit == "instance":
        return list(instances)
    if unit != "rule":
        raise ValueError(f"unknown ranking unit {unit!r}")
    per_rule: dict[tuple[SourceTool, str], list[WarningInstance]] = defaultdict(list)
    for inst in instances:
        per_rule[(inst.tool, inst.rule_id)].append(inst)
    units = []
    for (tool, rule), group in per_rule.items():
        combo_counts = Counter(i.combo for i in group)
        dominant = min(combo_counts, key=lambda c: (-combo_counts[c], -c.severity, c.sort_index))
        units.append(WarningInstance(tool, rule, max(i.severity for i in group), dominant))
    return units


def _rank(instances: Sequence[WarningInstance], key_of, scored_of=lambda inst: True) -> list[RankedWarning]:
    counts = Counter((i.tool, i.rule_id) for i in instances)

    def sort_key(inst):
        return (
            not scored_of(inst),
            -key_of(inst),
            -counts[(inst.tool, inst.rule_id)],
            inst.rule_id,
            TOOL_ORDER.index(inst.tool),
            inst.package,
            inst.location,
            -inst.severity,
            inst.combo.sort_index,
        )

    return [
        RankedWarning(i.tool, i.rule_id, float(key_of(i)), bucket_of(i.combo), i.severity, i.package, i.location)
        for i in sorted(instances, key=sort_key)
    ]


def rank_by_severity(instances: Sequence[WarningInstance]) -> list[RankedWarning]:
    """Most severe first; ties by descending rule instance count, then rule id."""
    return _rank(instances, lambda i: i.severity)


def rank_by_p(instances: Sequence[WarningInstance], scores: Iterable[PScore], combo: SmellCombo) -> list[RankedWarning]:
    """Descending P(rule, combo); rules without a score for the combo go last."""
    table = {(s.tool, s.rule_id): s.p for s in scores if s.combo == combo}
    if not table:
        raise UnknownCombo(f"no P scores for combination {combo.label}")
    return _rank(
        instances,
        lambda i: table.get((i.tool, i.rule_id), 0.0),
        lambda i: (i.tool, i.rule_id) in table,
    )


def rank_optimal(instances: Sequence[WarningInstance]) -> list[RankedWarning]:
    """Descending severity of the package's smells; smell-free warnings last."""
    return _rank(instances, lambda i: i.combo.severity)


# -- effort curves ------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    x: int
    inspected: int
    medium: int
    high: int
    critical: int

    @property
    def weighted(self) -> int:
        return 5 * self.medium + 7 * self.high + 9 * self.critical

    def bucket(self, name: str) -> int:
        return getattr(self, name.lower())


@dataclass(frozen=True)
class EffortCurve:
    ranker: str
    n: int
    points: tuple[CurvePoint, ...]

    def at(self, x: int) -> CurvePoint:
        return self.points[CUTOFFS.index(x)]


def cutoff_size(x: int, n: int, mode: str = "ceiling") -> int:
    if mode == "ceiling":
        return -(-x * n // 100)
    if mode == "floor":
        return x * n // 100
    raise ValueError(f"unknown cutoff mode {mode!r}")


def effort_curve(ranking: Sequence[RankedWarning], ranker: str = "", cutoff_mode: str = "ceiling") -> EffortCurve:
    n = len(ranking)
    if n == 0:
        raise EmptyRanking(f"ranking {ranker!r} is empty")
    wanted = {cutoff_size(x, n, cutoff_mode) for x in CUTOFFS}
    running = Counter()
    at_k = {0: Counter()}
    for k, r in enumerate(ranking, start=1):
        running[r.bucket] += 1
        if k in wanted:
            at_k[k] = Counter(running)
    points = []
    for x in CUTOFFS:
        k = cutoff_size(x, n, cutoff_mode)
        c = at_k[k]
        points.append(CurvePoint(x, k, c["Medium"], c["High"], c["Critical"]))
    return EffortCurve(ranker, n, tuple(points))


def popt_area(ranking: Sequence[RankedWarning], weights: Optional[dict] = None) -> float:
    """1 - normalized area between the optimal and the given cumulative capture curves.

    Curves accumulate bucket weights entry by entry; the normalizer is the
    area between the optimal (descending weight) and worst (ascending weight)
    orders, so the optimal ranking scores 1 and its reverse 0.
    """
    if not ranking:
        raise EmptyRanking("popt of an empty ranking")
    weights = weights or BUCKET_WEIGHT
    w = [weights[r.bucket] for r in ranking]

    def area(seq):
        total = cum = 0
        for v in seq:
            cum += v
            total += cum
        return total

    best = area(sorted(w, reverse=True))
    worst = area(sorted(w))
    if best == worst:
        _warnings.warn("all ranked entries carry the same weight; popt defined as 1", DegenerateCaseWarning)
        return 1.0
    value = 1.0 - (best - area(w)) / (best - worst)
    return min(1.0, max(0.0, value))


def compare_rankers(curves: Sequence[EffortCurve], alpha: float = DEFAULT_ALPHA) -> list[BatteryEntry]:
    """Pairwise Wilcoxon tests over the ten cutoff captures, per bucket."""
    if len(curves) < 2:
        raise InsufficientData("ranker comparison needs at least two curves")
    final = {(c.at(100).medium, c.at(100).high, c.at(100).critical) for c in curves}
    if len(final) != 1:
        raise ValueError("curves were not computed over the same warnings")
    entries = []
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            a, b = curves[i], curves[j]
            for bucket in BUCKETS:
                xs = [p.bucket(bucket) for p in a.points]
                ys = [p.bucket(bucket) for p in b.points]
                entries.append(paired_entry("H4", bucket, a.ranker, b.ranker, xs, ys, 1))
    return adjust_battery(entries, alpha)


def weighted_capture(ranking: Sequence[RankedWarning], k: int) -> int:
    return sum(r.weight for r in ranking[:k])


def default_p_combos(scores: Iterable[PScore]) -> list[SmellCombo]:
    present = {s.combo for s in scores}
    return sorted(present)

"""The batch steps behind the command line: ingest, analyze, rank, report.

Each step reads the previous step's files under ``<out>/`` and writes its
own subdirectory.  Tables are written twice: a comma-separated file whose
first line is a ``# meta`` JSON comment, and a JSON mirror with the same
columns.  With ``deterministic`` set, nothing run-dependent (timestamps,
library versions) enters the metadata, so identical inputs give identical
bytes.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import logging
import platform
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from . import __version__
from .analysis import (
    PAIRING_NOTE,
    BatteryEntry,
    PScore,
    Skipped,
    cooccurrence_table,
    correlation_matrix,
    h2_battery,
    h3_battery,
    nco_fraction,
    normality_gate,
    p_scores,
    top_quartile_warnings,
)
from .config import RunConfig
from .errors import InsufficientData, MalformedReport, MissingStage, SmellwarnError, UnknownCombo
from .ingest import dumps_jsonl, parse_report, read_smells, read_warnings
from .model import build_profiles, load_profiles, profiles_to_csv, profiles_to_json
from .npstats import BAND_NAMES, interpret_rho
from .prioritize import (
    CUTOFFS,
    compare_rankers,
    effort_curve,
    instances_from,
    popt_area,
    rank_by_p,
    rank_by_severity,
    rank_optimal,
    ranking_units,
)
from .records import ALL_COMBOS, SMELL_ORDER, TOOL_ORDER, SmellCombo, SourceTool

log = logging.getLogger(__name__)

REPORT_SUFFIXES = (".xml", ".json", ".csv")
SKIP_NAMES = {"manifest.json"}
TOOL_DUMPS = {t: f"warnings-{t.value.lower()}.jsonl" for t in TOOL_ORDER}

BATTERY_COLUMNS = (
    "family", "subject", "left", "right", "n_pairs",
    "statistic", "p_value", "q_value", "rejected", "method", "note",
)


# -- table output -----------------------------------------------------------


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _jsonable(v: Any) -> Any:
    if isinstance(v, float):
        return float(format(v, ".12g"))
    return v


def run_meta(cfg: RunConfig, table: str, **extra) -> dict:
    meta = {"tool": "smellwarn", "version": __version__, "table": table, "seed": cfg.seed, "config": cfg.recorded()}
    if not cfg.deterministic:
        import numpy
        import scipy

        meta["generated"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        meta["versions"] = {"python": platform.python_version(), "numpy": numpy.__version__, "scipy": scipy.__version__}
    meta.update(extra)
    return meta


def write_table(out_dir: Path, name: str, columns: Sequence[str], rows: Iterable[Sequence], meta: dict) -> None:
    rows = [list(r) for r in rows]
    buf = io.StringIO()
    buf.write("# meta " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(v) for v in r])
    (out_dir / f"{name}.csv").write_text(buf.getvalue())
    doc = {"meta": meta, "columns": list(columns), "rows": [{c: _jsonable(v) for c, v in zip(columns, r)} for r in rows]}
    _write_json(out_dir / f"{name}.json", doc)


def read_table(path: Path) -> dict:
    if not path.is_file():
        raise MissingStage(f"{path} not found; run the earlier pipeline step first")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedReport(f"{path}: {exc}") from exc


def _write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _stage_dir(cfg: RunConfig, name: str) -> Path:
    d = Path(cfg.out) / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def _battery_rows(entries: Sequence[BatteryEntry]) -> list[list]:
    rows = []
    for e in entries:
        t, a = e.test, e.adjusted
        rows.append([
            e.family, e.subject, e.left, e.right, e.n_pairs,
            t.statistic if t else None, t.p_value if t else None,
            a.q_value if a else None, e.rejected if t else None,
            t.method if t else None, e.note,
        ])
    return rows


# -- ingest -----------------------------------------------------------------


def discover_reports(inputs: Sequence[str]) -> list[tuple[Path, str]]:
    """Report files under the inputs, with display names relative to each input's parent."""
    if not inputs:
        raise MissingStage("no input paths given")
    found = []
    for raw in inputs:
        root = Path(raw)
        if not root.exists():
            raise MissingStage(f"input {raw} does not exist")
        if root.is_file():
            found.append((root, root.name))
            continue
        base = root.resolve().parent
        for p in sorted(root.rglob("*")):
            if p.is_file() and p.suffix.lower() in REPORT_SUFFIXES and p.name not in SKIP_NAMES:
                found.append((p, p.resolve().relative_to(base).as_posix()))
    if not found:
        raise MissingStage(f"no report files found under {', '.join(inputs)}")
    return found


def cmd_ingest(cfg: RunConfig) -> dict:
    files = discover_reports(cfg.inputs)
    mapping = cfg.mapping()

    def parse_one(item):
        path, shown = item
        try:
            fmt, records = parse_report(path.read_bytes(), mapping=mapping)
            return shown, fmt, records, None
        except (SmellwarnError, ValueError) as exc:
            return shown, None, None, exc

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(parse_one, files))
    else:
        results = [parse_one(f) for f in files]

    warnings, smells, parsed, failed = [], [], [], []
    for shown, fmt, records, exc in results:
        if exc is not None:
            if not cfg.keep_going:
                if isinstance(exc, SmellwarnError):
                    raise type(exc)(f"{shown}: {exc}") from exc
                raise MalformedReport(f"{shown}: {exc}") from exc
            log.warning("skipping %s: %s", shown, exc)
            failed.append({"path": shown, "error": f"{type(exc).__name__}: {exc}"})
            continue
        parsed.append({"path": shown, "format": fmt, "records": len(records)})
        (smells if fmt == "arcan" else warnings).extend(records)
    if not parsed:
        raise MalformedReport("no input file could be parsed")

    unresolved: list = []
    profiles = build_profiles(warnings, smells, cfg.source_roots, strict=False, unresolved=unresolved)

    out = _stage_dir(cfg, "ingest")
    for tool, name in TOOL_DUMPS.items():
        (out / name).write_text(dumps_jsonl(w for w in warnings if w.tool is tool))
    (out / "smells.jsonl").write_text(dumps_jsonl(smells))
    (out / "profiles.csv").write_text(profiles_to_csv(profiles))
    (out / "profiles.json").write_text(profiles_to_json(profiles))
    report = {
        "meta": run_meta(cfg, "ingest-report"),
        "files": parsed,
        "failed": failed,
        "warnings": {t.value: sum(1 for w in warnings if w.tool is t) for t in TOOL_ORDER},
        "smells": {k.value: sum(1 for s in smells if s.kind is k) for k in SMELL_ORDER},
        "packages": len(profiles),
        "unresolved": [
            {"kind": type(rec).__name__, "entity": _entity(rec), "reason": reason} for rec, reason in unresolved
        ],
    }
    _write_json(out / "ingest-report.json", report)
    return report


def _entity(rec) -> str:
    if hasattr(rec, "affected"):
        return ";".join(rec.affected)
    return rec.fq_class or rec.file_path or ""


def _load_ingest(cfg: RunConfig):
    d = Path(cfg.out) / "ingest"
    path = d / "profiles.json"
    if not path.is_file():
        raise MissingStage(f"{path} not found; run `smellwarn ingest` first")
    return d, load_profiles(path)


# -- analyze ----------------------------------------------------------------


def cmd_analyze(cfg: RunConfig) -> dict:
    _, profiles = _load_ingest(cfg)
    out = _stage_dir(cfg, "analysis")
    skipped: list[Skipped] = []
    errors: dict[str, str] = {}
    families: dict[str, list] = {}

    def guarded(name, fn):
        try:
            return fn()
        except InsufficientData as exc:
            errors[name] = str(exc)
            skipped.append(Skipped(name, str(exc)))
            return []

    def meta(name, **extra):
        if name in errors:
            extra["error"] = errors[name]
        return run_meta(cfg, name, **extra)

    gate = guarded("normality", lambda: normality_gate(profiles, cfg.alpha))
    write_table(out, "normality", BATTERY_COLUMNS, _battery_rows(gate), meta("normality"))
    families["HN"] = gate

    bands = cfg.bands()
    cells = guarded("correlation", lambda: correlation_matrix(profiles, cfg.alpha, skipped, cfg.jobs))
    write_table(
        out,
        "correlation",
        ("tool", "rule_id", "smell", "n_packages", "rho", "p_value", "q_value", "rejected", "band", "method"),
        [
            [c.tool.value, c.rule_id, c.smell.value, c.n_packages, c.rho, c.test.p_value,
             c.adjusted.q_value, c.adjusted.rejected, interpret_rho(c.rho, bands), c.test.method]
            for c in cells
        ],
        meta("correlation"),
    )
    families["H1"] = cells

    top = top_quartile_warnings(cells, skipped)
    rho_of = {(c.tool, c.rule_id, c.smell): c.rho for c in cells}
    write_table(
        out,
        "top_quartile",
        ("tool", "smell", "position", "rule_id", "rho"),
        [
            [tool.value, smell.value, i, rule, rho_of[(tool, rule, smell)]]
            for (tool, smell), rules in top.items()
            for i, rule in enumerate(rules, start=1)
        ],
        meta("top_quartile"),
    )

    table = cooccurrence_table(profiles)
    write_table(
        out,
        "cooccurrence",
        ("tool", "rule_id", "combo", "count"),
        [[t.value, r, k.label, c] for t, r, k, c in table.rows()],
        meta("cooccurrence"),
    )
    scores = p_scores(table, skipped)
    write_table(
        out,
        "p_scores",
        ("tool", "rule_id", "combo", "p", "count", "denominator"),
        [[s.tool.value, s.rule_id, s.combo.label, s.p, s.count, s.denominator] for s in scores],
        meta("p_scores"),
    )

    for axis in ("smell", "combo"):
        name = f"h2_{axis}"
        entries = guarded(name, lambda: h2_battery(table, profiles, cfg.alpha, axis, cfg.min_pairs))
        write_table(out, name, BATTERY_COLUMNS, _battery_rows(entries), meta(name, pairing=PAIRING_NOTE))
        families[f"H2-{axis}"] = entries
    h3 = guarded("h3", lambda: h3_battery(table, cfg.alpha, cfg.min_pairs))
    write_table(out, "h3", BATTERY_COLUMNS, _battery_rows(h3), meta("h3", pairing=PAIRING_NOTE))
    families["H3"] = h3

    write_table(out, "skipped", ("what", "reason"), [[s.what, s.reason] for s in skipped], meta("skipped"))
    summary = {
        "meta": run_meta(cfg, "analysis-summary"),
        "packages": len(profiles),
        "warnings": table.total(),
        "smell_instances": {k.value: sum(p.smell_count(k) for p in profiles) for k in SMELL_ORDER},
        "nco_fraction": nco_fraction(table),
        "families": {name: _family_stats(entries) for name, entries in families.items()},
        "errors": errors,
    }
    _write_json(out / "summary.json", summary)
    return summary


def _family_stats(entries) -> dict:
    tested = [e for e in entries if getattr(e, "adjusted", None) is not None]
    rejected = sum(1 for e in tested if e.adjusted.rejected)
    return {
        "tests": len(entries),
        "testable": len(tested),
        "rejected": rejected,
        "rate": rejected / len(tested) if tested else 0.0,
    }


# -- rank -------------------------------------------------------------------


def _load_scores(path: Path) -> list[PScore]:
    doc = read_table(path)
    return [
        PScore(SourceTool.parse(r["tool"]), r["rule_id"], SmellCombo.parse(r["combo"]), float(r["p"]),
               int(r["count"]), int(r["denominator"]))
        for r in doc["rows"]
    ]


def _p_combos(cfg: RunConfig, scores: Sequence[PScore]) -> list[SmellCombo]:
    present = [c for c in ALL_COMBOS if any(s.combo == c for s in scores)]
    if cfg.p_combo.lower() == "all":
        return present
    return [SmellCombo.parse(c) for c in cfg.p_combo.split(",") if c.strip()]


def cmd_rank(cfg: RunConfig) -> dict:
    ingest_dir, profiles = _load_ingest(cfg)
    scores = _load_scores(Path(cfg.out) / "analysis" / "p_scores.json")
    warnings = []
    for name in TOOL_DUMPS.values():
        path = ingest_dir / name
        if not path.is_file():
            raise MissingStage(f"{path} not found; run `smellwarn ingest` first")
        warnings.extend(read_warnings(path))
    tools = [SourceTool.parse(t) for t in cfg.rank_tools] or None
    instances = instances_from(warnings, profiles, cfg.source_roots, tools=tools)
    units = ranking_units(instances, cfg.rank_unit)

    rankings = [("severity", rank_by_severity(units))]
    notes = []
    for combo in _p_combos(cfg, scores):
        try:
            rankings.append((f"p-{combo.label}", rank_by_p(units, scores, combo)))
        except UnknownCombo as exc:
            notes.append(str(exc))
    rankings.append(("optimal", rank_optimal(units)))

    out = _stage_dir(cfg, "rank")
    curves, popt = [], {}
    columns = ("position", "tool", "rule_id", "key", "severity", "bucket", "package", "location")
    for name, ranking in rankings:
        write_table(
            out,
            f"ranking-{name}",
            columns,
            [[i, r.tool.value, r.rule_id, r.key, r.severity, r.bucket, r.package, r.location]
             for i, r in enumerate(ranking, start=1)],
            run_meta(cfg, f"ranking-{name}"),
        )
        curves.append(effort_curve(ranking, name, cfg.cutoff_mode))
        popt[name] = popt_area(ranking)

    write_table(
        out,
        "curves",
        ("ranker", "x", "inspected", "medium", "high", "critical", "weighted"),
        [[c.ranker, p.x, p.inspected, p.medium, p.high, p.critical, p.weighted] for c in curves for p in c.points],
        run_meta(cfg, "curves"),
    )
    write_table(out, "popt", ("ranker", "popt"), [[k, v] for k, v in popt.items()], run_meta(cfg, "popt"))
    h4 = compare_rankers(curves, cfg.alpha) if len(curves) >= 2 else []
    write_table(out, "h4", BATTERY_COLUMNS, _battery_rows(h4), run_meta(cfg, "h4", notes=notes))
    plot = {
        "meta": run_meta(cfg, "curves-plot"),
        "x": list(CUTOFFS),
        "series": [
            {"ranker": c.ranker, "bucket": b, "y": [p.bucket(b) for p in c.points]}
            for c in curves
            for b in ("Medium", "High", "Critical")
        ],
    }
    _write_json(out / "curves-plot.json", plot)
    result = {
        "rankers": [c.ranker for c in curves],
        "units": len(units),
        "popt": popt,
        "h4": _family_stats(h4),
        "notes": notes,
    }
    _write_json(out / "rank-summary.json", {"meta": run_meta(cfg, "rank-summary"), **result})
    return result


# -- report -----------------------------------------------------------------


def band_histogram(rows: Sequence[dict]) -> dict[str, int]:
    hist = Counter(r["band"] for r in rows)
    return {b: hist.get(b, 0) for b in BAND_NAMES}


def top5(rows: Sequence[dict], k: int = 5) -> list[tuple[str, str, int, str, float]]:
    """The k highest-rho rules per (tool, smell), ties by rule id."""
    groups: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for r in rows:
        groups[(r["tool"], r["smell"])].append(r)
    order = {t.value: i for i, t in enumerate(TOOL_ORDER)}
    smells = {s.value: i for i, s in enumerate(SMELL_ORDER)}
    out = []
    for key in sorted(groups, key=lambda g: (order[g[0]], smells[g[1]])):
        best = sorted(groups[key], key=lambda r: (-r["rho"], r["rule_id"]))[:k]
        out.extend((key[0], key[1], i, r["rule_id"], r["rho"]) for i, r in enumerate(best, start=1))
    return out


def top_cooccurring(rows: Sequence[dict], k: int = 5) -> list[tuple[str, int, str, str, int]]:
    """The k most frequent rules inside each smell combination."""
    groups: dict[str, list[dict]] = defaultdict(list)
    for r in rows:
        groups[r["combo"]].append(r)
    out = []
    for combo in [c.label for c in ALL_COMBOS if c.label in groups]:
        best = sorted(groups[combo], key=lambda r: (-r["count"], r["tool"], r["rule_id"]))[:k]
        out.extend((combo, i, r["tool"], r["rule_id"], r["count"]) for i, r in enumerate(best, start=1))
    return out


def cmd_report(cfg: RunConfig) -> str:
    analysis = Path(cfg.out) / "analysis"
    summary_path = analysis / "summary.json"
    if not summary_path.is_file():
        raise MissingStage(f"{summary_path} not found; run `smellwarn analyze` first")
    summary = json.loads(summary_path.read_text())
    corr = read_table(analysis / "correlation.json")["rows"]
    cooc = read_table(analysis / "cooccurrence.json")["rows"]
    rank_dir = Path(cfg.out) / "rank"
    curves = read_table(rank_dir / "curves.json")["rows"] if (rank_dir / "curves.json").is_file() else []
    popt = read_table(rank_dir / "popt.json")["rows"] if (rank_dir / "popt.json").is_file() else []
    h4 = read_table(rank_dir / "h4.json")["rows"] if (rank_dir / "h4.json").is_file() else []

    families = dict(summary["families"])
    if h4:
        tested = [r for r in h4 if r["q_value"] is not None]
        rej = sum(1 for r in tested if r["rejected"])
        families["H4"] = {"tests": len(h4), "testable": len(tested), "rejected": rej,
                          "rate": rej / len(tested) if tested else 0.0}
    hist = band_histogram(corr)
    lines = [
        "smellwarn summary",
        "=================",
        "",
        f"packages: {summary['packages']}",
        f"warning instances: {summary['warnings']}",
        "smell instances: " + ", ".join(f"{k}={v}" for k, v in summary["smell_instances"].items()),
        f"alpha: {cfg.alpha}",
        f"NCO fraction: {summary['nco_fraction']:.2f}",
        "",
        f"Spearman rho bands ({len(corr)} rule/smell cells)",
    ]
    width = max(hist.values(), default=0)
    for band, n in hist.items():
        bar = "#" * (round(40 * n / width) if width else 0)
        lines.append(f"  {band:<9}{n:>6}  {bar}")
    lines += ["", "Rejection rates after BH", f"  {'family':<10}{'tests':>7}{'testable':>10}{'rejected':>10}{'rate':>8}"]
    for name, st in families.items():
        lines.append(f"  {name:<10}{st['tests']:>7}{st['testable']:>10}{st['rejected']:>10}{st['rate']:>8.2f}")
    lines += ["", "Top-5 rules by rho per (tool, smell)", f"  {'tool':<11}{'smell':<6}{'#':>2}  {'rule':<32}{'rho':>8}"]
    for tool, smell, i, rule, rho in top5(corr):
        lines.append(f"  {tool:<11}{smell:<6}{i:>2}  {rule:<32}{rho:>8.3f}")
    lines += ["", "Top-5 co-occurring rules per combination", f"  {'combo':<10}{'#':>2}  {'tool':<11}{'rule':<32}{'count':>7}"]
    for combo, i, tool, rule, count in top_cooccurring(cooc):
        lines.append(f"  {combo:<10}{i:>2}  {tool:<11}{rule:<32}{count:>7}")
    if curves:
        lines += ["", "Effort curves: weighted capture (5*medium + 7*high + 9*critical) at x%"]
        header = "  " + f"{'ranker':<14}" + "".join(f"{x:>7}" for x in CUTOFFS) + f"{'popt':>8}"
        lines.append(header)
        popt_of = {r["ranker"]: r["popt"] for r in popt}
        by_ranker: dict[str, dict[int, int]] = defaultdict(dict)
        for r in curves:
            by_ranker[r["ranker"]][r["x"]] = r["weighted"]
        for ranker, pts in by_ranker.items():
            cells = "".join(f"{pts[x]:>7}" for x in CUTOFFS)
            lines.append(f"  {ranker:<14}{cells}{popt_of.get(ranker, float('nan')):>8.3f}")
    text = "\n".join(lines) + "\n"

    out = _stage_dir(cfg, "report")
    (out / "summary.txt").write_text(text)
    plot = {
        "meta": run_meta(cfg, "report-plot"),
        "rho_bands": hist,
        "rho_values": sorted(r["rho"] for r in corr),
        "rejection_rates": {k: v["rate"] for k, v in families.items()},
        "nco_fraction": round(summary["nco_fraction"], 12),
        "curves": curves,
    }
    _write_json(out / "plot-data.json", plot)
    return text

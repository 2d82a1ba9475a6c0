"""Package attribution and the per-package join of warnings and smells."""

from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import MalformedReport, UnresolvablePackage
from .records import (
    NCO,
    SMELL_ORDER,
    SmellCombo,
    SmellInstance,
    SmellKind,
    SourceTool,
    TOOL_ORDER,
    WarningRecord,
)

log = logging.getLogger(__name__)

RuleKey = tuple[SourceTool, str]

# Bare file names that must never be read as dotted class names.
FILE_EXTENSIONS = frozenset(
    {"java", "kt", "kts", "scala", "groovy", "class", "jar", "xml", "md", "txt", "properties", "json", "py"}
)


def check_package(name: str) -> str:
    """Validate a dotted package name and return it unchanged."""
    if not name or "/" in name or "\\" in name or name.startswith(".") or name.endswith("."):
        raise UnresolvablePackage(f"not a canonical package name: {name!r}")
    if any(not seg for seg in name.split(".")):
        raise UnresolvablePackage(f"empty segment in package name: {name!r}")
    return name


def _strip_root(path: str, roots: Sequence[str]) -> str:
    norm_roots = sorted({r.replace("\\", "/").strip("/") for r in roots if r.strip("/\\")}, key=len, reverse=True)
    padded = "/" + path.lstrip("/")
    for root in norm_roots:
        marker = "/" + root + "/"
        pos = padded.find(marker)
        if pos >= 0:
            return padded[pos + len(marker):]
    return path.lstrip("/")


def derive_package(entity: str, source_roots: Sequence[str] = (), class_uppercase: bool = True) -> str:
    """Package of a file path or fully qualified class name.

    Paths lose the longest matching source root and the file name; the
    remaining directories become dot-separated segments.  For class names,
    with ``class_uppercase`` the package ends before the first segment that
    starts with an uppercase letter (so nested classes resolve too), otherwise
    only the last segment is dropped.
    """
    text = (entity or "").strip()
    if not text:
        raise UnresolvablePackage("empty entity name")
    if "/" in text or "\\" in text:
        path = text.replace("\\", "/")
        while path.startswith("./"):
            path = path[2:]
        rest = _strip_root(path, source_roots)
        dirs = [d for d in rest.split("/")[:-1] if d and d != "."]
        if not dirs:
            raise UnresolvablePackage(f"no package directories in {entity!r}")
        return check_package(".".join(dirs))
    segments = text.split(".")
    if len(segments) < 2 or any(not s for s in segments):
        raise UnresolvablePackage(f"no package structure in {entity!r}")
    if len(segments) == 2 and segments[-1].lower() in FILE_EXTENSIONS:
        raise UnresolvablePackage(f"{entity!r} is a bare file name")
    if class_uppercase:
        for i, seg in enumerate(segments):
            if seg[:1].isupper():
                if i == 0:
                    raise UnresolvablePackage(f"{entity!r} has no package segment")
                return check_package(".".join(segments[:i]))
        raise UnresolvablePackage(f"{entity!r} has no class segment")
    return check_package(".".join(segments[:-1]))


@dataclass(frozen=True, eq=True)
class PackageProfile:
    package: str
    warning_counts: dict = field(default_factory=dict)  # (SourceTool, rule_id) -> int
    smell_counts: dict = field(default_factory=dict)  # SmellKind -> int

    @property
    def smells_present(self) -> frozenset:
        return frozenset(k for k, c in self.smell_counts.items() if c > 0)

    @property
    def total_warnings(self) -> int:
        return sum(self.warning_counts.values())

    @property
    def combo(self) -> SmellCombo:
        return combo_of(self)

    def count(self, tool: SourceTool, rule_id: str) -> int:
        return self.warning_counts.get((tool, rule_id), 0)

    def smell_count(self, kind: SmellKind) -> int:
        return self.smell_counts.get(kind, 0)


def combo_of(profile: PackageProfile) -> SmellCombo:
    """Smell combination of a package; NCO when no smell is present."""
    present = profile.smells_present
    return SmellCombo(present) if present else NCO


def warning_package(record: WarningRecord, source_roots: Sequence[str] = (), class_uppercase: bool = True) -> str:
    if record.fq_class:
        try:
            return derive_package(record.fq_class, source_roots, class_uppercase)
        except UnresolvablePackage:
            if not record.file_path:
                raise
    return derive_package(record.file_path or "", source_roots, class_uppercase)


def smell_packages(smell: SmellInstance, source_roots: Sequence[str] = (), class_uppercase: bool = True) -> list[str]:
    """Distinct packages a smell affects, in first-seen order."""
    if smell.granularity == "package":
        pkgs = [check_package(e) for e in smell.affected]
    else:
        pkgs = [derive_package(e, source_roots, class_uppercase) for e in smell.affected]
    return list(dict.fromkeys(pkgs))


def build_profiles(
    warnings: Iterable[WarningRecord],
    smells: Iterable[SmellInstance],
    source_roots: Sequence[str] = (),
    class_uppercase: bool = True,
    strict: bool = True,
    unresolved: Optional[list] = None,
) -> list[PackageProfile]:
    """Join warnings and smells by package.

    A smell spanning k packages counts once in each of them.  With
    ``strict=False`` unattributable records are skipped and appended to
    ``unresolved`` as ``(record, message)`` pairs instead of raising.
    """
    wcounts: dict[str, Counter] = defaultdict(Counter)
    scounts: dict[str, Counter] = defaultdict(Counter)

    def _fail(record, exc):
        if strict:
            raise UnresolvablePackage(str(exc), record=record) from exc
        if unresolved is not None:
            unresolved.append((record, str(exc)))

    for w in warnings:
        try:
            pkg = warning_package(w, source_roots, class_uppercase)
        except UnresolvablePackage as exc:
            _fail(w, exc)
            continue
        wcounts[pkg][(w.tool, w.rule_id)] += 1
    for s in smells:
        try:
            pkgs = smell_packages(s, source_roots, class_uppercase)
        except UnresolvablePackage as exc:
            _fail(s, exc)
            continue
        for pkg in pkgs:
            scounts[pkg][s.kind] += 1

    return _assemble(wcounts, scounts)


def merge_profiles(*shards: Iterable[PackageProfile]) -> list[PackageProfile]:
    """Combine profile shards; count maps add, so the merge is order-free."""
    wcounts: dict[str, Counter] = defaultdict(Counter)
    scounts: dict[str, Counter] = defaultdict(Counter)
    for shard in shards:
        for p in shard:
            wcounts[p.package].update(p.warning_counts)
            scounts[p.package].update(p.smell_counts)
    return _assemble(wcounts, scounts)


def _assemble(wcounts: dict[str, Counter], scounts: dict[str, Counter]) -> list[PackageProfile]:
    return [
        PackageProfile(
            pkg,
            dict(sorted(((k, c) for k, c in wcounts[pkg].items() if c), key=lambda kv: rule_sort_key(kv[0]))),
            {k: scounts[pkg][k] for k in SMELL_ORDER if scounts[pkg][k]},
        )
        for pkg in sorted(set(wcounts) | set(scounts))
    ]


def rule_sort_key(key: RuleKey) -> tuple[int, str]:
    return TOOL_ORDER.index(key[0]), key[1]


def rule_keys(profiles: Iterable[PackageProfile]) -> list[RuleKey]:
    keys = {k for p in profiles for k in p.warning_counts}
    return sorted(keys, key=rule_sort_key)


# -- profile dumps ------------------------------------------------------------

PROFILE_COLUMNS = ("package", "combo", "smells", "warnings")


def _rule_token(key: RuleKey) -> str:
    return f"{key[0].value}:{key[1]}"


def _parse_rule_token(token: str) -> RuleKey:
    tool, _, rule = token.partition(":")
    return SourceTool.parse(tool), rule


def profiles_to_csv(profiles: Iterable[PackageProfile]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PROFILE_COLUMNS)
    for p in profiles:
        smells = ";".join(f"{k.value}={c}" for k, c in p.smell_counts.items())
        warns = ";".join(f"{_rule_token(k)}={c}" for k, c in p.warning_counts.items())
        writer.writerow([p.package, p.combo.label, smells, warns])
    return buf.getvalue()


def profiles_from_csv(text: str) -> list[PackageProfile]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != PROFILE_COLUMNS:
        raise MalformedReport("profile table: unexpected header")
    profiles = []
    for row in rows[1:]:
        if not row:
            continue
        try:
            package, combo, smells, warns = row
            smell_counts = {}
            for pair in filter(None, smells.split(";")):
                k, _, c = pair.rpartition("=")
                smell_counts[SmellKind(k)] = int(c)
            warning_counts = {}
            for pair in filter(None, warns.split(";")):
                k, _, c = pair.rpartition("=")
                warning_counts[_parse_rule_token(k)] = int(c)
        except ValueError as exc:
            raise MalformedReport(f"profile table: bad row {row!r} ({exc})") from exc
        p = PackageProfile(check_package(package), warning_counts, smell_counts)
        if p.combo.label != combo:
            raise MalformedReport(f"profile table: combo {combo!r} disagrees with smells of {package}")
        profiles.append(p)
    return profiles


def profiles_to_json(profiles: Iterable[PackageProfile]) -> str:
    doc = [
        {
            "package": p.package,
            "combo": p.combo.label,
            "smell_counts": {k.value: c for k, c in p.smell_counts.items()},
            "warning_counts": [
                {"tool": k[0].value, "rule_id": k[1], "count": c} for k, c in p.warning_counts.items()
            ],
        }
        for p in profiles
    ]
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def profiles_from_json(text: str) -> list[PackageProfile]:
    try:
        return [
            PackageProfile(
                check_package(d["package"]),
                {(SourceTool.parse(w["tool"]), w["rule_id"]): int(w["count"]) for w in d["warning_counts"]},
                {SmellKind(k): int(c) for k, c in d["smell_counts"].items()},
            )
            for d in json.loads(text)
        ]
    except (KeyError, ValueError, TypeError) as exc:
        raise MalformedReport(f"profile document: {exc}") from exc


def load_profiles(path: Union[str, Path]) -> list[PackageProfile]:
    path = Path(path)
    text = path.read_text()
    return profiles_from_json(text) if path.suffix == ".json" else profiles_from_csv(text)

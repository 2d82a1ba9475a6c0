"""Readers and writers for native analyzer reports.

Four warning formats (Checkstyle, PMD, FindBugs/SpotBugs XML and the
SonarQube issue-search JSON export) plus the Arcan-style smell table are
parsed into canonical :class:`~smellwarn.records.WarningRecord` and
:class:`~smellwarn.records.SmellInstance` lists.  Every parser is a pure
function of its input bytes and preserves document order.

Native severities are mapped onto a shared 1..5 scale by a
:class:`SeverityMap`; the default table can be overridden from JSON.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Union

from .errors import ConfigError, MalformedReport, UnknownSeverity, UnknownSmellKind
from .records import (
    NativeSeverity,
    SmellInstance,
    SmellKind,
    SourceTool,
    WarningRecord,
)

ReportInput = Union[bytes, str]

CHECKSTYLE_LEVELS = ("ignore", "info", "warning", "error")  # ascending severity
SONAR_LEVELS = ("Info", "Minor", "Major", "Critical", "Blocker")  # ascending severity
FINDBUGS_GROUPS = ("scariest", "scary", "troubling", "concern")  # rank 1..20 order

WARNING_FORMATS = ("checkstyle", "pmd", "findbugs", "sonarqube")
FORMAT_TOOL = {
    "checkstyle": SourceTool.CHECKSTYLE,
    "pmd": SourceTool.PMD,
    "findbugs": SourceTool.FINDBUGS,
    "sonarqube": SourceTool.SONARQUBE,
}


def rank_group(rank: int) -> str:
    """FindBugs bug rank (1..20) to its named group, boundaries inclusive."""
    if isinstance(rank, bool) or not isinstance(rank, int) or not 1 <= rank <= 20:
        raise UnknownSeverity(f"FindBugs rank must be an integer in 1..20, got {rank!r}")
    if rank <= 4:
        return "scariest"
    if rank <= 9:
        return "scary"
    if rank <= 14:
        return "troubling"
    return "concern"


@dataclass(frozen=True)
class SeverityMap:
    checkstyle: Mapping[str, int] = field(
        default_factory=lambda: {"error": 4, "warning": 3, "info": 2, "ignore": 1}
    )
    sonarqube: Mapping[str, int] = field(
        default_factory=lambda: {"Blocker": 5, "Critical": 4, "Major": 3, "Minor": 2, "Info": 1}
    )
    pmd: Mapping[int, int] = field(default_factory=lambda: {p: 6 - p for p in range(1, 6)})
    findbugs: Mapping[str, int] = field(
        default_factory=lambda: {"scariest": 5, "scary": 4, "troubling": 3, "concern": 2}
    )

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Check totality, range and monotonicity of every table."""
        tables = [
            ("checkstyle", [self.checkstyle.get(k) for k in CHECKSTYLE_LEVELS]),
            ("sonarqube", [self.sonarqube.get(k) for k in SONAR_LEVELS]),
            ("pmd", [self.pmd.get(p) for p in range(5, 0, -1)]),
            ("findbugs", [self.findbugs.get(g) for g in reversed(FINDBUGS_GROUPS)]),
        ]
        for name, ascending in tables:
            if any(v is None for v in ascending):
                raise ConfigError(f"severity map for {name} is not total")
            if any(not 1 <= int(v) <= 5 for v in ascending):
                raise ConfigError(f"severity map for {name} leaves the 1..5 range")
            if any(a > b for a, b in zip(ascending, ascending[1:])):
                raise ConfigError(f"severity map for {name} is not monotone")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SeverityMap":
        """Overlay a partial override (keys as in the default tables) on the defaults."""
        base = cls()
        unknown = set(d) - {"checkstyle", "sonarqube", "pmd", "findbugs"}
        if unknown:
            raise ConfigError(f"unknown severity-map sections: {sorted(unknown)}")
        checkstyle = {**base.checkstyle, **{k.lower(): int(v) for k, v in d.get("checkstyle", {}).items()}}
        sonarqube = {**base.sonarqube, **{k.capitalize(): int(v) for k, v in d.get("sonarqube", {}).items()}}
        pmd = {**base.pmd, **{int(k): int(v) for k, v in d.get("pmd", {}).items()}}
        findbugs = {**base.findbugs, **{k.lower(): int(v) for k, v in d.get("findbugs", {}).items()}}
        return cls(checkstyle, sonarqube, pmd, findbugs)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SeverityMap":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read severity map {path}: {exc}") from exc

    def to_dict(self) -> dict[str, dict[str, int]]:
        return {
            "checkstyle": dict(self.checkstyle),
            "sonarqube": dict(self.sonarqube),
            "pmd": {str(k): v for k, v in self.pmd.items()},
            "findbugs": dict(self.findbugs),
        }


DEFAULT_SEVERITY_MAP = SeverityMap()


def canonical_native(tool: SourceTool, raw: Union[str, int]) -> Union[str, int]:
    """Validate a native severity and return its canonical spelling."""
    if tool is SourceTool.CHECKSTYLE:
        value = str(raw).strip().lower()
        if value not in CHECKSTYLE_LEVELS:
            raise UnknownSeverity(f"Checkstyle severity {raw!r} not in {CHECKSTYLE_LEVELS}")
        return value
    if tool is SourceTool.SONARQUBE:
        value = str(raw).strip().capitalize()
        if value not in SONAR_LEVELS:
            raise UnknownSeverity(f"SonarQube severity {raw!r} not in {SONAR_LEVELS}")
        return value
    lo, hi = (1, 5) if tool is SourceTool.PMD else (1, 20)
    try:
        value = int(str(raw).strip())
    except ValueError:
        raise UnknownSeverity(f"{tool.value} severity {raw!r} is not an integer") from None
    if not lo <= value <= hi:
        raise UnknownSeverity(f"{tool.value} severity {value} outside {lo}..{hi}")
    return value


def normalize_severity(native: NativeSeverity, mapping: SeverityMap = DEFAULT_SEVERITY_MAP) -> int:
    raw = canonical_native(native.tool, native.raw)
    if native.tool is SourceTool.CHECKSTYLE:
        return int(mapping.checkstyle[raw])
    if native.tool is SourceTool.SONARQUBE:
        return int(mapping.sonarqube[raw])
    if native.tool is SourceTool.PMD:
        return int(mapping.pmd[raw])
    return int(mapping.findbugs[rank_group(raw)])


def _make_record(tool, rule_id, category, raw, mapping, **loc) -> WarningRecord:
    native = NativeSeverity(tool, canonical_native(tool, raw))
    try:
        return WarningRecord(
            tool=tool,
            rule_id=rule_id,
            category=category or "",
            native=native,
            severity=normalize_severity(native, mapping),
            **loc,
        )
    except ValueError as exc:
        raise MalformedReport(f"{tool.value}: {exc}") from exc


# -- XML helpers ------------------------------------------------------------


def _xml_root(data: ReportInput, expected: tuple[str, ...], fmt: str) -> ET.Element:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedReport(f"{fmt}: not well-formed XML ({exc})") from exc
    if _local(root.tag) not in expected:
        raise MalformedReport(f"{fmt}: unexpected root element <{_local(root.tag)}>")
    return root


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _children(elem: ET.Element, name: str) -> list[ET.Element]:
    return [c for c in elem if _local(c.tag) == name]


def _opt_line(value: Optional[str], fmt: str) -> Optional[int]:
    if value is None or value == "":
        return None
    try:
        line = int(value)
    except ValueError:
        raise MalformedReport(f"{fmt}: line attribute {value!r} is not an integer") from None
    return line if line >= 1 else None


def _required(elem: ET.Element, attr: str, fmt: str) -> str:
    value = elem.get(attr)
    if value is None or value.strip() == "":
        raise MalformedReport(f"{fmt}: <{_local(elem.tag)}> lacks required attribute {attr!r}")
    return value.strip()


# -- parsers ----------------------------------------------------------------


def parse_checkstyle(data: ReportInput, mapping: SeverityMap = DEFAULT_SEVERITY_MAP) -> list[WarningRecord]:
    root = _xml_root(data, ("checkstyle",), "checkstyle")
    records = []
    for file_elem in _children(root, "file"):
        path = _required(file_elem, "name", "checkstyle")
        for err in _children(file_elem, "error"):
            source = _required(err, "source", "checkstyle")
            segments = source.split(".")
            records.append(
                _make_record(
                    SourceTool.CHECKSTYLE,
                    segments[-1],
                    segments[-2] if len(segments) > 1 else "",
                    _required(err, "severity", "checkstyle"),
                    mapping,
                    file_path=path,
                    line=_opt_line(err.get("line"), "checkstyle"),
                )
            )
    return records


def parse_pmd(data: ReportInput, mapping: SeverityMap = DEFAULT_SEVERITY_MAP) -> list[WarningRecord]:
    root = _xml_root(data, ("pmd",), "pmd")
    records = []
    for file_elem in _children(root, "file"):
        path = _required(file_elem, "name", "pmd")
        for v in _children(file_elem, "violation"):
            package = (v.get("package") or "").strip()
            cls = (v.get("class") or "").strip()
            fq_class = f"{package}.{cls}" if package and cls else (cls or None)
            records.append(
                _make_record(
                    SourceTool.PMD,
                    _required(v, "rule", "pmd"),
                    (v.get("ruleset") or "").strip(),
                    _required(v, "priority", "pmd"),
                    mapping,
                    file_path=path,
                    line=_opt_line(v.get("beginline"), "pmd"),
                    fq_class=fq_class,
                )
            )
    return records


def parse_findbugs(data: ReportInput, mapping: SeverityMap = DEFAULT_SEVERITY_MAP) -> list[WarningRecord]:
    """Parse a FindBugs or SpotBugs ``BugCollection`` document."""
    root = _xml_root(data, ("BugCollection",), "findbugs")
    records = []
    for bug in root.iter():
        if _local(bug.tag) != "BugInstance":
            continue
        classes = _children(bug, "Class")
        fq_class = classes[0].get("classname") if classes else None
        lines = _children(bug, "SourceLine")
        if not lines and classes:
            lines = _children(classes[0], "SourceLine")
        path = line = None
        if lines:
            path = lines[0].get("sourcepath") or None
            line = _opt_line(lines[0].get("start"), "findbugs") if path else None
        records.append(
            _make_record(
                SourceTool.FINDBUGS,
                _required(bug, "type", "findbugs"),
                (bug.get("category") or "").strip(),
                _required(bug, "rank", "findbugs"),
                mapping,
                file_path=path,
                line=line,
                fq_class=fq_class,
            )
        )
    return records


def parse_sonarqube(data: ReportInput, mapping: SeverityMap = DEFAULT_SEVERITY_MAP) -> list[WarningRecord]:
    """Parse a SonarQube issue export (a bare array or ``{"issues": [...]}``)."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedReport(f"sonarqube: invalid JSON ({exc})") from exc
    issues = doc.get("issues") if isinstance(doc, dict) else doc
    if not isinstance(issues, list):
        raise MalformedReport("sonarqube: expected an array of issues")
    records = []
    for i, issue in enumerate(issues):
        if not isinstance(issue, dict):
            raise MalformedReport(f"sonarqube: issue #{i} is not an object")
        for key in ("rule", "severity", "component"):
            if not issue.get(key):
                raise MalformedReport(f"sonarqube: issue #{i} lacks {key!r}")
        component = str(issue["component"])
        path = component.split(":", 1)[1] if ":" in component else component
        line = issue.get("line")
        if line is not None and (isinstance(line, bool) or not isinstance(line, int)):
            raise MalformedReport(f"sonarqube: issue #{i} has non-integer line {line!r}")
        remediation = issue.get("effort") or issue.get("debt")
        records.append(
            _make_record(
                SourceTool.SONARQUBE,
                str(issue["rule"]),
                str(issue.get("type") or ""),
                issue["severity"],
                mapping,
                file_path=path,
                line=line if line and line >= 1 else None,
                remediation=str(remediation) if remediation else None,
            )
        )
    return records


SMELL_ALIASES = {
    "cd": SmellKind.CD,
    "cyclic dependency": SmellKind.CD,
    "cyclicdependency": SmellKind.CD,
    "ud": SmellKind.UD,
    "unstable dependency": SmellKind.UD,
    "unstabledependency": SmellKind.UD,
    "hl": SmellKind.HL,
    "hd": SmellKind.HL,
    "hub-like dependency": SmellKind.HL,
    "hublikedependency": SmellKind.HL,
    "hub-like": SmellKind.HL,
}

ARCAN_COLUMNS = ("smell_type", "granularity", "affected_entities")


def smell_kind(name: str) -> SmellKind:
    try:
        return SMELL_ALIASES[name.strip().lower()]
    except KeyError:
        raise UnknownSmellKind(f"unknown smell kind {name!r}") from None


def parse_arcan(data: ReportInput, delimiter: str = ",", secondary: str = ";") -> list[SmellInstance]:
    """Parse a delimited smell table with ``smell_type, granularity, affected_entities`` columns."""
    text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedReport("arcan: empty document") from None
    except csv.Error as exc:
        raise MalformedReport(f"arcan: {exc}") from exc
    columns = [h.strip().lower() for h in header]
    missing = [c for c in ARCAN_COLUMNS if c not in columns]
    if missing:
        raise MalformedReport(f"arcan: header lacks columns {missing}")
    idx = {c: columns.index(c) for c in ARCAN_COLUMNS}
    smells = []
    try:
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(columns):
                raise MalformedReport(f"arcan: line {lineno} has {len(row)} of {len(columns)} fields")
            kind = smell_kind(row[idx["smell_type"]])
            granularity = row[idx["granularity"]].strip().lower()
            affected = tuple(e.strip() for e in row[idx["affected_entities"]].split(secondary) if e.strip())
            try:
                smells.append(SmellInstance(kind, granularity, affected))
            except ValueError as exc:
                raise MalformedReport(f"arcan: line {lineno}: {exc}") from exc
    except csv.Error as exc:
        raise MalformedReport(f"arcan: {exc}") from exc
    return smells


PARSERS = {
    "checkstyle": parse_checkstyle,
    "pmd": parse_pmd,
    "findbugs": parse_findbugs,
    "sonarqube": parse_sonarqube,
}


def detect_format(data: bytes) -> str:
    """Sniff which report format a document is in."""
    head = data.lstrip(b"\xef\xbb\xbf \t\r\n")
    if head.startswith(b"<"):
        try:
            tag = _local(ET.fromstring(data).tag)
        except ET.ParseError as exc:
            raise MalformedReport(f"not well-formed XML ({exc})") from exc
        formats = {"checkstyle": "checkstyle", "pmd": "pmd", "BugCollection": "findbugs"}
        if tag not in formats:
            raise MalformedReport(f"unrecognised XML report root <{tag}>")
        return formats[tag]
    if head.startswith((b"{", b"[")):
        return "sonarqube"
    first_line = head.split(b"\n", 1)[0].lower()
    if b"smell_type" in first_line:
        return "arcan"
    raise MalformedReport("unrecognised report format")


def parse_report(
    data: bytes,
    fmt: Optional[str] = None,
    mapping: SeverityMap = DEFAULT_SEVERITY_MAP,
    delimiter: str = ",",
    secondary: str = ";",
) -> tuple[str, list]:
    fmt = fmt or detect_format(data)
    if fmt == "arcan":
        return fmt, parse_arcan(data, delimiter, secondary)
    if fmt not in PARSERS:
        raise MalformedReport(f"unknown report format {fmt!r}")
    return fmt, PARSERS[fmt](data, mapping)


# -- writers (native formats) ----------------------------------------------

CHECKSTYLE_PREFIX = "com.puppycrawl.tools.checkstyle.checks"


def _xml_bytes(root: ET.Element) -> bytes:
    ET.indent(root)
    return b'<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="utf-8") + b"\n"


def _group_by_path(records: Iterable[WarningRecord]) -> dict[str, list[WarningRecord]]:
    groups: dict[str, list[WarningRecord]] = {}
    for r in records:
        groups.setdefault(r.file_path or "", []).append(r)
    return groups


def write_checkstyle(records: Iterable[WarningRecord]) -> bytes:
    root = ET.Element("checkstyle", version="10.12.0")
    for path, group in _group_by_path(records).items():
        f = ET.SubElement(root, "file", name=path)
        for r in group:
            source = f"{CHECKSTYLE_PREFIX}.{r.category}.{r.rule_id}" if r.category else r.rule_id
            attrs = {"severity": str(r.native.raw), "message": r.rule_id, "source": source}
            if r.line:
                attrs = {"line": str(r.line), **attrs}
            ET.SubElement(f, "error", attrs)
    return _xml_bytes(root)


def write_pmd(records: Iterable[WarningRecord]) -> bytes:
    root = ET.Element("pmd", version="6.55.0")
    for path, group in _group_by_path(records).items():
        f = ET.SubElement(root, "file", name=path)
        for r in group:
            attrs = {"rule": r.rule_id, "ruleset": r.category, "priority": str(r.native.raw)}
            if r.line:
                attrs["beginline"] = str(r.line)
            if r.fq_class:
                package, _, cls = r.fq_class.rpartition(".")
                attrs["package"] = package
                attrs["class"] = cls
            v = ET.SubElement(f, "violation", attrs)
            v.text = r.rule_id
    return _xml_bytes(root)


def write_findbugs(records: Iterable[WarningRecord]) -> bytes:
    root = ET.Element("BugCollection", version="4.7.3")
    for r in records:
        bug = ET.SubElement(
            root, "BugInstance", type=r.rule_id, rank=str(r.native.raw), category=r.category
        )
        if r.fq_class:
            ET.SubElement(bug, "Class", classname=r.fq_class)
        if r.file_path:
            attrs = {"sourcepath": r.file_path}
            if r.fq_class:
                attrs["classname"] = r.fq_class
            if r.line:
                attrs["start"] = attrs["end"] = str(r.line)
            ET.SubElement(bug, "SourceLine", attrs)
    return _xml_bytes(root)


def write_sonarqube(records: Iterable[WarningRecord], project: str = "project") -> bytes:
    issues = []
    for i, r in enumerate(records):
        issue: dict[str, Any] = {
            "key": f"{project}-{i:05d}",
            "rule": r.rule_id,
            "severity": str(r.native.raw).upper(),
            "component": f"{project}:{r.file_path}",
            "type": r.category,
        }
        if r.line:
            issue["line"] = r.line
        if r.remediation:
            issue["effort"] = r.remediation
        issues.append(issue)
    doc = {"total": len(issues), "p": 1, "ps": len(issues), "issues": issues}
    return (json.dumps(doc, indent=1) + "\n").encode()


def write_arcan(smells: Iterable[SmellInstance], delimiter: str = ",", secondary: str = ";") -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["id", *ARCAN_COLUMNS])
    for i, s in enumerate(smells):
        writer.writerow([i, s.kind.value, s.granularity, secondary.join(s.affected)])
    return buf.getvalue().encode()


WRITERS = {
    "checkstyle": write_checkstyle,
    "pmd": write_pmd,
    "findbugs": write_findbugs,
    "sonarqube": write_sonarqube,
}


# -- canonical newline-delimited JSON dumps ----------------------------------


def dumps_jsonl(records: Iterable[Union[WarningRecord, SmellInstance]]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def write_jsonl(records: Iterable[Union[WarningRecord, SmellInstance]], path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_jsonl(records))


def _read_jsonl(path: Union[str, Path]) -> list[dict]:
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if line.strip():
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise MalformedReport(f"{path}:{lineno}: {exc}") from exc
    return out


def read_warnings(path: Union[str, Path]) -> list[WarningRecord]:
    try:
        return [WarningRecord.from_dict(d) for d in _read_jsonl(path)]
    except (KeyError, ValueError) as exc:
        raise MalformedReport(f"{path}: bad warning record ({exc})") from exc


def read_smells(path: Union[str, Path]) -> list[SmellInstance]:
    try:
        return [SmellInstance.from_dict(d) for d in _read_jsonl(path)]
    except (KeyError, ValueError) as exc:
        raise MalformedReport(f"{path}: bad smell record ({exc})") from exc

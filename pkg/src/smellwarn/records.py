"""Canonical records shared by ingestion, the package model and the analyses.

All records are frozen dataclasses; they round-trip through plain dicts
(``to_dict`` / ``from_dict``) for the newline-delimited JSON dumps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Optional, Union


class SourceTool(str, enum.Enum):
    CHECKSTYLE = "Checkstyle"
    FINDBUGS = "FindBugs"
    PMD = "PMD"
    SONARQUBE = "SonarQube"

    @classmethod
    def parse(cls, value: Union[str, "SourceTool"]) -> "SourceTool":
        if isinstance(value, SourceTool):
            return value
        for tool in cls:
            if tool.value.lower() == str(value).lower() or tool.name.lower() == str(value).lower():
                return tool
        raise ValueError(f"unknown tool {value!r}")

    def __str__(self) -> str:
        return self.value


TOOL_ORDER = (SourceTool.CHECKSTYLE, SourceTool.FINDBUGS, SourceTool.PMD, SourceTool.SONARQUBE)


@dataclass(frozen=True)
class NativeSeverity:
    """Severity exactly as the tool emitted it (text or integer)."""

    tool: SourceTool
    raw: Union[str, int]


@dataclass(frozen=True)
class WarningRecord:
    tool: SourceTool
    rule_id: str
    category: str
    native: NativeSeverity
    severity: int  # normalized level 1..5, 5 = most severe
    file_path: Optional[str] = None
    line: Optional[int] = None
    fq_class: Optional[str] = None
    remediation: Optional[str] = None  # SonarQube effort/debt text, carried verbatim

    def __post_init__(self):
        if not self.rule_id:
            raise ValueError("rule_id must be non-empty")
        if not self.file_path and not self.fq_class:
            raise ValueError(f"warning {self.rule_id} has neither file_path nor fq_class")
        if self.line is not None:
            if not self.file_path:
                raise ValueError("line given without file_path")
            if self.line < 1:
                raise ValueError(f"line must be positive, got {self.line}")
        if not 1 <= self.severity <= 5:
            raise ValueError(f"normalized severity out of range: {self.severity}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": self.tool.value,
            "rule_id": self.rule_id,
            "category": self.category,
            "native": self.native.raw,
            "severity": self.severity,
            "file_path": self.file_path,
            "line": self.line,
            "fq_class": self.fq_class,
            "remediation": self.remediation,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "WarningRecord":
        tool = SourceTool.parse(d["tool"])
        return cls(
            tool=tool,
            rule_id=d["rule_id"],
            category=d.get("category") or "",
            native=NativeSeverity(tool, d["native"]),
            severity=int(d["severity"]),
            file_path=d.get("file_path"),
            line=d.get("line"),
            fq_class=d.get("fq_class"),
            remediation=d.get("remediation"),
        )


class SmellKind(str, enum.Enum):
    CD = "CD"  # cyclic dependency
    UD = "UD"  # unstable dependency
    HL = "HL"  # hub-like dependency

    @property
    def default_severity(self) -> int:
        return DEFAULT_SMELL_SEVERITY[self]

    def __str__(self) -> str:
        return self.value


# Extension point: a new smell kind needs an enum member, a severity and a
# position in SMELL_ORDER; SmellCombo.ALL is derived from SMELL_ORDER.
DEFAULT_SMELL_SEVERITY = {SmellKind.CD: 5, SmellKind.UD: 7, SmellKind.HL: 9}
SMELL_ORDER = (SmellKind.CD, SmellKind.UD, SmellKind.HL)

GRANULARITIES = ("class", "package")


@dataclass(frozen=True)
class SmellInstance:
    kind: SmellKind
    granularity: str
    affected: tuple[str, ...]
    severity: int = 0  # 0 means "use the kind's default"

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {self.granularity!r}")
        if not self.affected or any(not a for a in self.affected):
            raise ValueError("a smell must affect at least one named entity")
        if self.severity == 0:
            object.__setattr__(self, "severity", self.kind.default_severity)
        if not 1 <= self.severity <= 10:
            raise ValueError(f"smell severity out of range: {self.severity}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "granularity": self.granularity,
            "affected": list(self.affected),
            "severity": self.severity,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SmellInstance":
        return cls(SmellKind(d["kind"]), d["granularity"], tuple(d["affected"]), int(d.get("severity", 0)))


@dataclass(frozen=True, order=False)
class SmellCombo:
    """A subset of smell kinds; the empty subset is NCO (non-co-occurring)."""

    kinds: frozenset = frozenset()

    @classmethod
    def of(cls, kinds: Iterable[Union[SmellKind, str]]) -> "SmellCombo":
        return cls(frozenset(SmellKind(k) for k in kinds))

    @classmethod
    def parse(cls, label: str) -> "SmellCombo":
        label = label.strip()
        if label.upper() == "NCO":
            return NCO
        try:
            return cls.of(part.strip().upper() for part in label.split("+"))
        except ValueError:
            raise ValueError(f"unknown smell combination {label!r}") from None

    @property
    def is_nco(self) -> bool:
        return not self.kinds

    @property
    def label(self) -> str:
        if not self.kinds:
            return "NCO"
        return "+".join(k.value for k in SMELL_ORDER if k in self.kinds)

    @property
    def severity(self) -> int:
        """Most severe member smell; 0 for NCO."""
        return max((DEFAULT_SMELL_SEVERITY[k] for k in self.kinds), default=0)

    @property
    def sort_index(self) -> int:
        return ALL_COMBOS.index(self)

    def __lt__(self, other: "SmellCombo") -> bool:
        return self.sort_index < other.sort_index

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"SmellCombo({self.label})"


NCO = SmellCombo()


def _all_combos() -> list[SmellCombo]:
    from itertools import combinations

    out = []
    for size in range(len(SMELL_ORDER) + 1):
        for members in combinations(SMELL_ORDER, size):
            out.append(SmellCombo(frozenset(members)))
    return out


ALL_COMBOS: list[SmellCombo] = _all_combos()

"""Synthetic corpora with planted warning/smell structure.

A :class:`PlantSpec` fixes the packages, the rules and the dependence to
plant.  Every package draws one smell combination from ``combo_mix``; each
present smell kind gets an instance count from a latent standard normal.
A targeted rule's count is driven by a latent that loads on the smell
latents (a Gaussian copula), so its rank correlation with the smell count
approximates the requested value.  Untargeted rules are Poisson with a
per-combination rate, which is how P-profiles are planted.

Randomness comes from a single ``numpy.random.Generator(PCG64(seed))`` with a
fixed draw order, so a seed pins the corpus byte for byte.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import special

from .analysis import CooccurrenceTable
from .errors import InvalidSpec, UnresolvablePackage
from .ingest import DEFAULT_SEVERITY_MAP, WRITERS, canonical_native, normalize_severity, write_arcan, write_jsonl
from .model import PackageProfile, derive_package, merge_profiles, smell_packages
from .records import (
    ALL_COMBOS,
    NCO,
    SMELL_ORDER,
    NativeSeverity,
    SmellCombo,
    SmellInstance,
    SmellKind,
    SourceTool,
    WarningRecord,
)

SOURCE_ROOT = "src/main/java"
CLASSES_PER_PACKAGE = 3

_CATEGORY = {
    SourceTool.CHECKSTYLE: "coding",
    SourceTool.FINDBUGS: "BAD_PRACTICE",
    SourceTool.PMD: "bestpractices",
    SourceTool.SONARQUBE: "CODE_SMELL",
}

_FORMAT_OF = {
    SourceTool.CHECKSTYLE: "checkstyle",
    SourceTool.FINDBUGS: "findbugs",
    SourceTool.PMD: "pmd",
    SourceTool.SONARQUBE: "sonarqube",
}

CORPUS_FILES = {
    "checkstyle": "checkstyle-result.xml",
    "pmd": "pmd.xml",
    "findbugs": "spotbugsXml.xml",
    "sonarqube": "sonar-issues.json",
    "arcan": "arcan-smells.csv",
}


def latent_loading(rho: float) -> float:
    """Normal correlation whose copula has Spearman rank correlation ``rho``."""
    return 2.0 * math.sin(math.pi * rho / 6.0)


@dataclass(frozen=True)
class PlantSpec:
    """What to plant.

    Parameters
    ----------
    seed : int
    n_packages : int
    rules : sequence of (tool, rule_id, native severity)
        Rule ids must be unique across tools.
    target_rho : mapping (rule_id, SmellKind) -> float in [-1, 1]
        Planted rank correlation between the rule's per-package count and
        the smell's per-package instance count.  ``+-1`` switches the rule to
        the deterministic coupling ``x = 2y`` (or its mirror).
    combo_mix : mapping SmellCombo -> probability
    p_profile : mapping SmellCombo -> {rule_id: weight}
        Rate multipliers for untargeted rules; missing entries weigh 1.
    rate : float
        Mean count of an untargeted rule at weight 1.
    levels, smell_levels : int
        Quantization levels of targeted rule counts and smell counts.
    """

    seed: int = 0
    n_packages: int = 100
    rules: tuple = ()
    target_rho: Mapping = field(default_factory=dict)
    combo_mix: Mapping = field(default_factory=lambda: {NCO: 1.0})
    p_profile: Mapping = field(default_factory=dict)
    rate: float = 2.0
    levels: int = 20
    smell_levels: int = 20
    package_prefix: str = "org.synth"

    def __post_init__(self):
        rules = tuple((SourceTool.parse(t), str(r), sev) for t, r, sev in self.rules)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(
            self, "target_rho", {(str(r), SmellKind(s)): float(v) for (r, s), v in self.target_rho.items()}
        )
        object.__setattr__(self, "combo_mix", {_combo(c): float(p) for c, p in self.combo_mix.items()})
        object.__setattr__(
            self,
            "p_profile",
            {_combo(c): {str(r): float(w) for r, w in ws.items()} for c, ws in self.p_profile.items()},
        )
        self.validate()

    def validate(self) -> None:
        if self.n_packages < 1:
            raise InvalidSpec(f"n_packages must be positive, got {self.n_packages}")
        if self.levels < 1 or self.smell_levels < 1:
            raise InvalidSpec("quantization levels must be positive")
        if self.rate < 0:
            raise InvalidSpec("rate must be non-negative")
        ids = [r for _, r, _ in self.rules]
        if len(set(ids)) != len(ids):
            raise InvalidSpec("rule ids must be unique")
        for tool, rule, sev in self.rules:
            try:
                canonical_native(tool, sev)
            except ValueError as exc:
                raise InvalidSpec(f"rule {rule}: {exc}") from exc
        mix = self.combo_mix
        if not mix or any(p < 0 for p in mix.values()) or abs(sum(mix.values()) - 1.0) > 1e-9:
            raise InvalidSpec("combo_mix must be a probability distribution over combinations")
        for (rule, _), rho in self.target_rho.items():
            if rule not in ids:
                raise InvalidSpec(f"target for unknown rule {rule!r}")
            if not -1.0 <= rho <= 1.0 or math.isnan(rho):
                raise InvalidSpec(f"target rho {rho} outside [-1, 1]")
        for rule in ids:
            targets = self.targets_of(rule)
            if any(abs(v) == 1.0 for v in targets.values()) and len(targets) > 1:
                raise InvalidSpec(f"rule {rule}: a +-1 target must be the rule's only target")
            if sum(latent_loading(v) ** 2 for v in targets.values()) > 1.0 + 1e-12:
                raise InvalidSpec(f"rule {rule}: targets are jointly unattainable")
        for combo, weights in self.p_profile.items():
            if any(w < 0 for w in weights.values()):
                raise InvalidSpec(f"negative p_profile weight in {combo.label}")
            unknown = set(weights) - set(ids)
            if unknown:
                raise InvalidSpec(f"p_profile names unknown rules {sorted(unknown)}")

    def targets_of(self, rule_id: str) -> dict[SmellKind, float]:
        return {s: v for (r, s), v in self.target_rho.items() if r == rule_id}

    def package_name(self, i: int) -> str:
        return f"{self.package_prefix}.p{i:03d}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "n_packages": self.n_packages,
            "rules": [[t.value, r, s] for t, r, s in self.rules],
            "target_rho": [[r, s.value, v] for (r, s), v in self.target_rho.items()],
            "combo_mix": {c.label: p for c, p in self.combo_mix.items()},
            "p_profile": {c.label: dict(w) for c, w in self.p_profile.items()},
            "rate": self.rate,
            "levels": self.levels,
            "smell_levels": self.smell_levels,
            "package_prefix": self.package_prefix,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PlantSpec":
        try:
            kw = dict(d)
            kw["rules"] = [tuple(r) for r in d.get("rules", ())]
            kw["target_rho"] = {(r, s): v for r, s, v in d.get("target_rho", ())}
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpec):
                raise
            raise InvalidSpec(f"bad plant specification: {exc}") from exc


def _combo(c: Union[str, SmellCombo]) -> SmellCombo:
    if isinstance(c, SmellCombo):
        return c
    try:
        return SmellCombo.parse(c)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc


@dataclass(frozen=True)
class PlantCounts:
    """Per-package counts drawn for a spec, before records are materialized."""

    packages: tuple
    combos: tuple  # SmellCombo per package
    smell_counts: dict  # SmellKind -> int array (n,)
    rule_counts: dict  # rule_id -> int array (n,)


def draw_counts(spec: PlantSpec) -> PlantCounts:
    """Draw every count a PlantSpec asks for.

    Draw order is fixed: combo uniforms, smell latents (n x kinds), then one
    noise vector per rule in spec order, Poisson draws for rules without a
    target.  Each block has a fixed size so one rule's settings never shift
    another's stream.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n_packages
    mix_combos = [c for c in ALL_COMBOS if spec.combo_mix.get(c, 0.0) > 0]
    cum = np.cumsum([spec.combo_mix[c] for c in mix_combos])
    cum[-1] = 1.0
    picks = np.searchsorted(cum, rng.random(n), side="right")
    combos = tuple(mix_combos[min(int(i), len(mix_combos) - 1)] for i in picks)

    z_smell = rng.standard_normal((n, len(SMELL_ORDER)))
    smell_counts = {}
    for j, kind in enumerate(SMELL_ORDER):
        present = np.array([kind in c.kinds for c in combos], dtype=bool)
        level = np.minimum(np.floor(special.ndtr(z_smell[:, j]) * spec.smell_levels), spec.smell_levels - 1)
        smell_counts[kind] = np.where(present, 1 + level.astype(np.int64), 0)

    rule_counts = {}
    for _, rule, _ in spec.rules:
        noise = rng.standard_normal(n)
        targets = spec.targets_of(rule)
        if targets:
            rule_counts[rule] = _coupled_count(spec, targets, z_smell, noise, smell_counts)
            continue
        lam = np.array([spec.rate * spec.p_profile.get(c, {}).get(rule, 1.0) for c in combos])
        rule_counts[rule] = rng.poisson(lam).astype(np.int64)
    packages = tuple(spec.package_name(i) for i in range(n))
    return PlantCounts(packages, combos, smell_counts, rule_counts)


def _coupled_count(spec, targets, z_smell, noise, smell_counts) -> np.ndarray:
    if len(targets) == 1:
        ((kind, rho),) = targets.items()
        if abs(rho) == 1.0:
            y = smell_counts[kind]
            return 2 * y if rho > 0 else 2 * (spec.smell_levels - y)
    loadings = np.zeros(len(SMELL_ORDER))
    for s, v in targets.items():
        loadings[SMELL_ORDER.index(s)] = latent_loading(v)
    resid = math.sqrt(max(0.0, 1.0 - float(loadings @ loadings)))
    z = z_smell @ loadings + resid * noise
    level = np.minimum(np.floor(special.ndtr(z) * spec.levels), spec.levels - 1)
    return level.astype(np.int64)


def records_from_counts(spec: PlantSpec, counts: PlantCounts) -> tuple[list[WarningRecord], list[SmellInstance]]:
    warnings = []
    natives = {rule: (tool, NativeSeverity(tool, canonical_native(tool, sev))) for tool, rule, sev in spec.rules}
    severities = {rule: normalize_severity(nat, DEFAULT_SEVERITY_MAP) for rule, (_, nat) in natives.items()}
    for i, pkg in enumerate(counts.packages):
        pkg_dir = pkg.replace(".", "/")
        for _, rule, _ in spec.rules:
            tool, native = natives[rule]
            for k in range(int(counts.rule_counts[rule][i])):
                cls = f"C{k % CLASSES_PER_PACKAGE}"
                warnings.append(
                    WarningRecord(
                        tool=tool,
                        rule_id=rule,
                        category=_CATEGORY[tool],
                        native=native,
                        severity=severities[rule],
                        file_path=f"{SOURCE_ROOT}/{pkg_dir}/{cls}.java",
                        line=k + 1,
                        fq_class=f"{pkg}.{cls}",
                    )
                )
    smells = []
    for i, pkg in enumerate(counts.packages):
        for kind in SMELL_ORDER:
            smells.extend(SmellInstance(kind, "package", (pkg,)) for _ in range(int(counts.smell_counts[kind][i])))
    return warnings, smells


def generate(spec: PlantSpec) -> tuple[list[WarningRecord], list[SmellInstance]]:
    """Warning and smell records for a PlantSpec; deterministic in ``spec.seed``."""
    return records_from_counts(spec, draw_counts(spec))


def profiles_from_counts(spec: PlantSpec, counts: PlantCounts) -> list[PackageProfile]:
    """The profiles ``build_profiles`` would give for the generated records, without the records."""
    tools = {rule: tool for tool, rule, _ in spec.rules}
    shard = [
        PackageProfile(
            pkg,
            {(tools[r], r): int(v[i]) for r, v in counts.rule_counts.items()},
            {k: int(v[i]) for k, v in counts.smell_counts.items()},
        )
        for i, pkg in enumerate(counts.packages)
    ]
    return merge_profiles(shard)


def oracle_counts(
    warnings: Iterable[WarningRecord],
    smells: Iterable[SmellInstance],
    source_roots: Sequence[str] = (SOURCE_ROOT,),
) -> CooccurrenceTable:
    """Brute-force co-occurrence recount: every warning against every smell.

    Unattributable warnings are skipped, as in a non-strict profile build.
    """
    affected = []
    for s in smells:
        try:
            affected.append((s.kind, smell_packages(s, source_roots)))
        except UnresolvablePackage:
            continue
    counts: Counter = Counter()
    for w in warnings:
        pkg = None
        for entity in (w.fq_class, w.file_path):
            if entity:
                try:
                    pkg = derive_package(entity, source_roots)
                    break
                except UnresolvablePackage:
                    continue
        if pkg is None:
            continue
        kinds = set()
        for kind, pkgs in affected:
            for other in pkgs:
                if other == pkg:
                    kinds.add(kind)
        counts[(w.tool, w.rule_id, SmellCombo(frozenset(kinds)))] += 1
    return CooccurrenceTable(dict(counts))


def write_corpus(
    warnings: Sequence[WarningRecord],
    smells: Sequence[SmellInstance],
    out_dir: Union[str, Path],
    project: str = "synth",
    extra: Optional[Mapping[str, Any]] = None,
) -> dict[str, Any]:
    """Write one project's native reports plus ``manifest.json``; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_format: dict[str, list[WarningRecord]] = {f: [] for f in WRITERS}
    for w in warnings:
        by_format[_FORMAT_OF[w.tool]].append(w)
    files = {}
    for fmt, records in by_format.items():
        if not records:
            continue
        writer = WRITERS[fmt]
        data = writer(records, project=project) if fmt == "sonarqube" else writer(records)
        (out / CORPUS_FILES[fmt]).write_bytes(data)
        files[fmt] = CORPUS_FILES[fmt]
    if smells:
        (out / CORPUS_FILES["arcan"]).write_bytes(write_arcan(smells))
        files["arcan"] = CORPUS_FILES["arcan"]
    manifest = {
        "project": project,
        "files": files,
        "warnings": {t.value: n for t, n in sorted(Counter(w.tool for w in warnings).items())},
        "smells": {k.value: n for k, n in sorted(Counter(s.kind for s in smells).items())},
        "source_roots": [SOURCE_ROOT],
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def write_dumps(warnings, smells, out_dir: Union[str, Path]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(warnings, out / "warnings.jsonl")
    write_jsonl(smells, out / "smells.jsonl")


def demo_spec(seed: int = 0, n_packages: int = 60, package_prefix: str = "org.synth") -> PlantSpec:
    """A small four-tool plant: two correlated rules, one NCO-only rule, fillers."""
    rules = [
        ("Checkstyle", "MagicNumber", "warning"),
        ("Checkstyle", "LineLength", "info"),
        ("FindBugs", "SE_BAD_FIELD", 6),
        ("FindBugs", "DM_DEFAULT_ENCODING", 12),
        ("PMD", "GodClass", 1),
        ("PMD", "UnusedPrivateField", 3),
        ("SonarQube", "java:S1192", "Critical"),
        ("SonarQube", "java:S1481", "Minor"),
    ]
    mix = {
        "NCO": 0.35,
        "CD": 0.15,
        "UD": 0.1,
        "HL": 0.05,
        "CD+UD": 0.15,
        "CD+HL": 0.05,
        "UD+HL": 0.05,
        "CD+UD+HL": 0.1,
    }
    nco_only = {c.label: {"java:S1481": 0.0} for c in ALL_COMBOS if not c.is_nco}
    nco_only["NCO"] = {"java:S1481": 4.0}
    return PlantSpec(
        seed=seed,
        n_packages=n_packages,
        rules=tuple(rules),
        target_rho={("GodClass", "CD"): 1.0, ("SE_BAD_FIELD", "HL"): 0.6},
        combo_mix=mix,
        p_profile=nco_only,
        rate=2.0,
        levels=12,
        smell_levels=4,
        package_prefix=package_prefix,
    )


MINI_RULES = (
    ("Checkstyle", "MagicNumber", "warning"),
    ("Checkstyle", "LineLength", "info"),
    ("Checkstyle", "JavadocMethod", "warning"),
    ("Checkstyle", "CyclomaticComplexity", "error"),
    ("FindBugs", "SE_BAD_FIELD", 6),
    ("FindBugs", "DM_DEFAULT_ENCODING", 12),
    ("FindBugs", "NP_NULL_ON_SOME_PATH", 3),
    ("FindBugs", "URF_UNREAD_FIELD", 17),
    ("PMD", "GodClass", 1),
    ("PMD", "UnusedPrivateField", 3),
    ("PMD", "ExcessiveMethodLength", 2),
    ("PMD", "BeanMembersShouldSerialize", 4),
    ("SonarQube", "java:S1192", "Critical"),
    ("SonarQube", "java:S1481", "Minor"),
    ("SonarQube", "java:S3776", "Major"),
    ("SonarQube", "java:S2259", "Blocker"),
)

MINI_PROJECTS = (("alpha", "org.alpha", 101), ("beta", "com.beta", 102), ("gamma", "net.gamma", 103))
MINI_NCO_RULE = "java:S1481"  # planted to occur only in smell-free packages


def minicorpus_specs(n_packages: int = 12) -> list[tuple[str, PlantSpec]]:
    """Three toy projects sharing one plant: four rules per tool, one NCO-only rule."""
    mix = {"NCO": 0.3, "CD": 0.15, "UD": 0.1, "HL": 0.1, "CD+UD": 0.15, "CD+HL": 0.05, "UD+HL": 0.05, "CD+UD+HL": 0.1}
    profile = {c.label: {MINI_NCO_RULE: 0.0} for c in ALL_COMBOS if not c.is_nco}
    profile["NCO"] = {MINI_NCO_RULE: 6.0}
    targets = {
        ("GodClass", "CD"): 1.0,
        ("JavadocMethod", "CD"): 0.6,
        ("SE_BAD_FIELD", "HL"): 0.5,
        ("java:S3776", "UD"): 0.5,
    }
    return [
        (
            name,
            PlantSpec(
                seed=seed,
                n_packages=n_packages,
                rules=MINI_RULES,
                target_rho=targets,
                combo_mix=mix,
                p_profile=profile,
                rate=1.5,
                levels=6,
                smell_levels=3,
                package_prefix=prefix,
            ),
        )
        for name, prefix, seed in MINI_PROJECTS
    ]


def calibration_spec(rho: float, seed: int, n_packages: int = 500, kind: SmellKind = SmellKind.CD) -> PlantSpec:
    """One targeted rule against a smell present in every package."""
    return PlantSpec(
        seed=seed,
        n_packages=n_packages,
        rules=(("PMD", "Planted", 2),),
        target_rho={("Planted", kind): rho},
        combo_mix={SmellCombo(frozenset([kind])): 1.0},
    )


def null_spec(seed: int, n_packages: int = 500, n_rules: int = 20) -> PlantSpec:
    """Uniform rule counts independent of three uniform smell counts.

    A zero target keeps each rule on its own latent, so counts are uniform on
    ``levels`` values and independent of every smell.
    """
    tools = ("Checkstyle", "FindBugs", "PMD", "SonarQube")
    natives = {"Checkstyle": "warning", "FindBugs": 10, "PMD": 3, "SonarQube": "Major"}
    rules = tuple((tools[i % 4], f"N{i:02d}", natives[tools[i % 4]]) for i in range(n_rules))
    return PlantSpec(
        seed=seed,
        n_packages=n_packages,
        rules=rules,
        target_rho={(r, SmellKind.CD): 0.0 for _, r, _ in rules},
        combo_mix={SmellCombo(frozenset(SMELL_ORDER)): 1.0},
    )

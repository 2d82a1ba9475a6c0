import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smellwarn import ingest
from smellwarn.errors import ConfigError, MalformedReport, UnknownSeverity, UnknownSmellKind
from smellwarn.ingest import (
    SeverityMap,
    canonical_native,
    detect_format,
    normalize_severity,
    parse_arcan,
    parse_checkstyle,
    parse_findbugs,
    parse_pmd,
    parse_report,
    parse_sonarqube,
    rank_group,
)
from smellwarn.records import NativeSeverity, SmellKind, SourceTool, WarningRecord


@pytest.fixture
def reports(data_dir):
    return data_dir / "reports"


# -- fixture files ------------------------------------------------------------


def test_checkstyle_fixture(reports):
    recs = parse_checkstyle((reports / "checkstyle.xml").read_bytes())
    assert len(recs) == 3
    first = recs[0]
    assert first.tool is SourceTool.CHECKSTYLE
    assert first.rule_id == "JavadocMethodCheck"
    assert first.category == "javadoc"
    assert first.native.raw == "error"
    assert first.severity == 4
    assert first.line == 12
    assert first.file_path == "src/main/java/org/example/App.java"
    assert recs[2].line is None
    assert [r.severity for r in recs] == [4, 3, 2]


def test_pmd_fixture_namespaced(reports):
    recs = parse_pmd((reports / "pmd.xml").read_bytes())
    assert [r.rule_id for r in recs] == ["GodClass", "UnusedPrivateField"]
    assert recs[0].native.raw == 1 and recs[0].severity == 5
    assert recs[0].fq_class == "org.example.App"
    assert recs[1].category == "Best Practices"
    assert recs[1].line == 15


def test_findbugs_fixture(reports):
    recs = parse_findbugs((reports / "spotbugs.xml").read_bytes())
    assert len(recs) == 2
    eq, dm = recs
    assert eq.rule_id == "EQ_COMPARING_CLASS_NAMES"
    assert rank_group(eq.native.raw) == "scariest"
    assert eq.severity == 5
    assert eq.line == 42 and eq.file_path == "org/example/model/Entity.java"
    assert dm.native.raw == 17 and dm.severity == 2
    assert dm.file_path is None and dm.fq_class == "org.example.io.Reader$Inner"


def test_sonarqube_fixture(reports):
    recs = parse_sonarqube((reports / "sonar.json").read_bytes())
    assert recs[0].severity == 5 and recs[0].native.raw == "Blocker"
    assert recs[0].remediation == "10min"
    assert recs[1].remediation == "2min"
    assert recs[1].file_path == "src/main/java/org/example/util/Strings.java"
    wrapped = json.dumps({"total": 2, "issues": json.loads((reports / "sonar.json").read_text())})
    assert parse_sonarqube(wrapped) == recs


def test_arcan_fixture(reports):
    smells = parse_arcan((reports / "arcan.csv").read_bytes())
    assert smells[0].kind is SmellKind.CD and smells[0].affected == ("org.example", "org.example.util")
    assert smells[1].kind is SmellKind.HL and smells[1].granularity == "class"
    assert smells[2].kind is SmellKind.UD
    assert [s.severity for s in smells] == [5, 9, 7]


def test_detect_and_dispatch(reports):
    names = {
        "checkstyle.xml": "checkstyle",
        "pmd.xml": "pmd",
        "spotbugs.xml": "findbugs",
        "sonar.json": "sonarqube",
        "arcan.csv": "arcan",
    }
    for name, fmt in names.items():
        data = (reports / name).read_bytes()
        assert detect_format(data) == fmt
        got_fmt, records = parse_report(data)
        assert got_fmt == fmt and records


# -- empty and invalid documents ---------------------------------------------


def test_empty_documents():
    assert parse_checkstyle('<checkstyle version="1"><file name="a/B.java"/></checkstyle>') == []
    assert parse_pmd("<pmd/>") == []
    assert parse_findbugs("<BugCollection/>") == []
    assert parse_sonarqube("[]") == []
    assert parse_sonarqube('{"issues": []}') == []
    assert parse_arcan("smell_type,granularity,affected_entities\n") == []


@pytest.mark.parametrize(
    "parser,doc",
    [
        (parse_checkstyle, '<checkstyle><file name="a/B.java"><error severity="fatal" source="x.Y"/></file></checkstyle>'),
        (parse_pmd, '<pmd><file name="a/B.java"><violation rule="R" priority="6"/></file></pmd>'),
        (parse_findbugs, '<BugCollection><BugInstance type="T" rank="0"><Class classname="a.B"/></BugInstance></BugCollection>'),
        (parse_findbugs, '<BugCollection><BugInstance type="T" rank="21"><Class classname="a.B"/></BugInstance></BugCollection>'),
        (parse_sonarqube, '[{"rule": "r", "severity": "Urgent", "component": "p:a/B.java"}]'),
    ],
)
def test_out_of_domain_severity(parser, doc):
    with pytest.raises(UnknownSeverity):
        parser(doc)


@pytest.mark.parametrize(
    "parser,doc",
    [
        (parse_checkstyle, "<checkstyle><file"),
        (parse_checkstyle, "<pmd/>"),
        (parse_checkstyle, '<checkstyle><file name="a/B.java"><error severity="error"/></file></checkstyle>'),
        (parse_pmd, '<pmd><file name="a/B.java"><violation priority="2"/></file></pmd>'),
        (parse_findbugs, '<BugCollection><BugInstance rank="3"/></BugCollection>'),
        (parse_findbugs, '<BugCollection><BugInstance type="T" rank="3"/></BugCollection>'),
        (parse_sonarqube, "{not json"),
        (parse_sonarqube, '{"issues": 3}'),
        (parse_sonarqube, '[{"rule": "r", "severity": "Major"}]'),
        (parse_sonarqube, '[{"rule": "r", "severity": "Major", "component": "p:a/B.java", "line": "x"}]'),
        (parse_arcan, "kind,where\nCD,org.a\n"),
        (parse_arcan, ""),
        (parse_arcan, "smell_type,granularity,affected_entities\nCD,module,org.a\n"),
    ],
)
def test_malformed(parser, doc):
    with pytest.raises(MalformedReport):
        parser(doc)


def test_unknown_smell_kind():
    with pytest.raises(UnknownSmellKind):
        parse_arcan("smell_type,granularity,affected_entities\nGC,package,org.a\n")


def test_arcan_custom_delimiters():
    doc = "smell_type\tgranularity\taffected_entities\nHD\tpackage\torg.a|org.b\n"
    (s,) = parse_arcan(doc, delimiter="\t", secondary="|")
    assert s.kind is SmellKind.HL and s.affected == ("org.a", "org.b")


def test_unknown_attributes_ignored():
    doc = '<checkstyle><file name="a/B.java" foo="1"><error severity="warning" source="x.y.Z" bar="2"/></file></checkstyle>'
    assert parse_checkstyle(doc)[0].rule_id == "Z"


def test_detect_unknown():
    with pytest.raises(MalformedReport):
        detect_format(b"<html/>")
    with pytest.raises(MalformedReport):
        detect_format(b"hello world")


# -- severity normalization ---------------------------------------------------


@pytest.mark.parametrize(
    "tool,raw,level",
    [
        (SourceTool.PMD, 1, 5),
        (SourceTool.PMD, 5, 1),
        (SourceTool.FINDBUGS, 17, 2),
        (SourceTool.FINDBUGS, 4, 5),
        (SourceTool.FINDBUGS, 5, 4),
        (SourceTool.FINDBUGS, 14, 3),
        (SourceTool.CHECKSTYLE, "error", 4),
        (SourceTool.CHECKSTYLE, "ignore", 1),
        (SourceTool.SONARQUBE, "Blocker", 5),
        (SourceTool.SONARQUBE, "INFO", 1),
    ],
)
def test_default_mapping(tool, raw, level):
    assert normalize_severity(NativeSeverity(tool, raw)) == level


@pytest.mark.parametrize("rank,group", [(1, "scariest"), (4, "scariest"), (5, "scary"), (9, "scary"), (10, "troubling"), (14, "troubling"), (15, "concern"), (20, "concern")])
def test_rank_group_boundaries(rank, group):
    assert rank_group(rank) == group


@pytest.mark.parametrize("rank", [0, 21, -3, "3", 2.0, True])
def test_rank_group_rejects(rank):
    with pytest.raises(UnknownSeverity):
        rank_group(rank)


def _domain(tool):
    if tool is SourceTool.CHECKSTYLE:
        return list(reversed(ingest.CHECKSTYLE_LEVELS))  # most severe first
    if tool is SourceTool.SONARQUBE:
        return list(reversed(ingest.SONAR_LEVELS))
    if tool is SourceTool.PMD:
        return [1, 2, 3, 4, 5]
    return list(range(1, 21))


@pytest.mark.parametrize("tool", list(SourceTool))
def test_mapping_total_and_monotone(tool):
    levels = [normalize_severity(NativeSeverity(tool, raw)) for raw in _domain(tool)]
    assert all(1 <= v <= 5 for v in levels)
    assert all(a >= b for a, b in zip(levels, levels[1:]))


def test_severity_map_override_and_validation(tmp_path):
    m = SeverityMap.from_dict({"checkstyle": {"error": 5}})
    assert normalize_severity(NativeSeverity(SourceTool.CHECKSTYLE, "error"), m) == 5
    with pytest.raises(ConfigError):
        SeverityMap.from_dict({"checkstyle": {"error": 1}})  # breaks monotonicity
    with pytest.raises(ConfigError):
        SeverityMap.from_dict({"pmd": {"1": 9}})
    with pytest.raises(ConfigError):
        SeverityMap.from_dict({"eslint": {}})
    path = tmp_path / "map.json"
    path.write_text(json.dumps({"sonarqube": {"major": 4, "critical": 4}}))
    loaded = SeverityMap.load(path)
    assert loaded.sonarqube["Major"] == 4
    assert SeverityMap.from_dict(loaded.to_dict()) == loaded


def test_canonical_native_spelling():
    assert canonical_native(SourceTool.SONARQUBE, "critical") == "Critical"
    assert canonical_native(SourceTool.CHECKSTYLE, " Warning ") == "warning"
    assert canonical_native(SourceTool.PMD, "2") == 2


# -- writer/parser round trips --------------------------------------------------

ident = st.from_regex(r"[a-z][a-z0-9]{0,6}", fullmatch=True)
cls_name = st.from_regex(r"[A-Z][A-Za-z0-9]{0,6}", fullmatch=True)
pkg = st.lists(ident, min_size=1, max_size=3).map(".".join)
line = st.one_of(st.none(), st.integers(1, 5000))


@st.composite
def records_for(draw, tool):
    rule = draw(st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,12}", fullmatch=True))
    category = draw(ident)
    p = draw(pkg)
    c = draw(cls_name)
    raw = draw(st.sampled_from(_domain(tool)))
    native = NativeSeverity(tool, raw)
    return WarningRecord(
        tool=tool,
        rule_id=rule,
        category=category,
        native=native,
        severity=normalize_severity(native),
        file_path=f"src/main/java/{p.replace('.', '/')}/{c}.java",
        line=draw(line),
        fq_class=f"{p}.{c}",
    )


def _project(rec, keep_class):
    return (rec.rule_id, rec.category, rec.native.raw, rec.severity, rec.file_path, rec.line, rec.fq_class if keep_class else None)


@pytest.mark.parametrize(
    "fmt,tool,keeps_class",
    [
        ("checkstyle", SourceTool.CHECKSTYLE, False),
        ("pmd", SourceTool.PMD, True),
        ("findbugs", SourceTool.FINDBUGS, True),
        ("sonarqube", SourceTool.SONARQUBE, False),
    ],
)
@settings(max_examples=40)
@given(data=st.data())
def test_writer_parser_round_trip(fmt, tool, keeps_class, data):
    recs = data.draw(st.lists(records_for(tool), max_size=12))
    written = ingest.WRITERS[fmt](recs)
    parsed = ingest.PARSERS[fmt](written)
    # checkstyle groups by file, so compare as multisets
    assert len(parsed) == len(recs)
    assert sorted(map(repr, map(_project, parsed, [keeps_class] * len(parsed)))) == sorted(
        map(repr, map(_project, recs, [keeps_class] * len(recs)))
    )
    assert ingest.PARSERS[fmt](written) == parsed  # pure


@settings(max_examples=40)
@given(st.lists(st.tuples(st.sampled_from(list(SmellKind)), st.sampled_from(["class", "package"]), st.lists(pkg, min_size=1, max_size=3)), max_size=10))
def test_arcan_round_trip(rows):
    from smellwarn.records import SmellInstance

    smells = [SmellInstance(k, g, tuple(a)) for k, g, a in rows]
    assert parse_arcan(ingest.write_arcan(smells)) == smells


def test_jsonl_round_trip(tmp_path, reports):
    recs = parse_pmd((reports / "pmd.xml").read_bytes()) + parse_sonarqube((reports / "sonar.json").read_bytes())
    ingest.write_jsonl(recs, tmp_path / "w.jsonl")
    assert ingest.read_warnings(tmp_path / "w.jsonl") == recs
    smells = parse_arcan((reports / "arcan.csv").read_bytes())
    ingest.write_jsonl(smells, tmp_path / "s.jsonl")
    assert ingest.read_smells(tmp_path / "s.jsonl") == smells
    (tmp_path / "bad.jsonl").write_text('{"tool": "PMD"}\n')
    with pytest.raises(MalformedReport):
        ingest.read_warnings(tmp_path / "bad.jsonl")

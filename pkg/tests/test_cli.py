import json
import re
import shutil
import time
from pathlib import Path

import pytest

from smellwarn.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARSE, main
from smellwarn.config import RunConfig, load_config
from smellwarn.errors import ConfigError
from smellwarn.pipeline import read_table

STEPS = (["analyze"], ["rank"], ["report"])


def run_all(corpus, out, *extra):
    for step in (["ingest", str(corpus)], *STEPS):
        assert main([*step, "--out", str(out), "--deterministic", *extra]) == EXIT_OK


def files_under(root: Path):
    return sorted(p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file())


@pytest.fixture(scope="module")
def golden_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    corpus = Path(__file__).parent / "data" / "minicorpus"
    start = time.perf_counter()
    run_all(corpus, out)
    return out, time.perf_counter() - start


def test_golden_byte_equal(golden_run, data_dir):
    out, _ = golden_run
    golden = data_dir / "golden"
    assert files_under(out) == files_under(golden)
    for rel in files_under(golden):
        assert (out / rel).read_bytes() == (golden / rel).read_bytes(), rel


def test_rerun_is_byte_stable(golden_run, minicorpus, tmp_path):
    run_all(minicorpus, tmp_path, "--jobs", "3")
    out, _ = golden_run
    for rel in files_under(out):
        assert (out / rel).read_bytes() == (tmp_path / rel).read_bytes(), rel


def test_ingest_counts_match_manifest(golden_run, minicorpus):
    out, _ = golden_run
    manifest = json.loads((minicorpus / "manifest.json").read_text())
    report = json.loads((out / "ingest" / "ingest-report.json").read_text())
    assert report["warnings"] == manifest["warnings"]
    assert {k: v for k, v in report["smells"].items() if v} == manifest["smells"]
    assert report["failed"] == [] and report["unresolved"] == []
    dumps = {p.name for p in (out / "ingest").glob("*.jsonl")}
    assert len([d for d in dumps if d.startswith("warnings-")]) == 4 and "smells.jsonl" in dumps
    formats = {f["format"] for f in report["files"]}
    assert formats == {"checkstyle", "pmd", "findbugs", "sonarqube", "arcan"}


def test_report_contents(golden_run):
    out, _ = golden_run
    text = (out / "report" / "summary.txt").read_text()
    assert re.search(r"^NCO fraction: \d\.\d\d$", text, re.M)
    assert "Top-5 rules by rho per (tool, smell)" in text
    curves = read_table(out / "rank" / "curves.json")["rows"]
    last = {r["ranker"]: (r["medium"], r["high"], r["critical"]) for r in curves if r["x"] == 100}
    assert set(last) == {"severity", "p-NCO", "optimal"}
    assert len(set(last.values())) == 1


def test_optimal_dominates_on_minicorpus(golden_run):
    out, _ = golden_run
    rows = read_table(out / "rank" / "curves.json")["rows"]
    w = {(r["ranker"], r["x"]): r["weighted"] for r in rows}
    popt = {r["ranker"]: r["popt"] for r in read_table(out / "rank" / "popt.json")["rows"]}
    assert popt["optimal"] == 1.0
    for x in range(10, 101, 10):
        assert all(w[("optimal", x)] >= w[(r, x)] for r in ("severity", "p-NCO"))


def test_p_nco_ranking_flags_planted_rule(golden_run, minicorpus):
    out, _ = golden_run
    planted = json.loads((minicorpus / "manifest.json").read_text())["nco_only_rule"]
    rows = read_table(out / "rank" / "ranking-p-NCO.json")["rows"]
    n = sum(r["rule_id"] == planted for r in rows)
    assert n > 0 and all(r["rule_id"] == planted for r in rows[:n])


def test_planted_perfect_pair_tops_correlation(golden_run):
    out, _ = golden_run
    rows = read_table(out / "analysis" / "correlation.json")["rows"]
    top = max(rows, key=lambda r: r["rho"])
    assert (top["rule_id"], top["smell"], top["rho"]) == ("GodClass", "CD", 1.0)


def test_metadata_header(golden_run, minicorpus, tmp_path):
    out, _ = golden_run
    first = (out / "analysis" / "correlation.csv").read_text().splitlines()[0]
    meta = json.loads(first[len("# meta "):])
    assert meta["config"]["alpha"] == 0.05 and "generated" not in meta
    assert main(["ingest", str(minicorpus), "--out", str(tmp_path)]) == EXIT_OK
    meta = json.loads((tmp_path / "ingest" / "ingest-report.json").read_text())["meta"]
    assert "generated" in meta and "numpy" in meta["versions"]


# -- errors and exit codes ----------------------------------------------------------


def test_empty_dir_is_config_error(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["ingest", str(tmp_path / "empty"), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "no report files" in capsys.readouterr().err


def test_malformed_exit_and_keep_going(tmp_path, data_dir, capsys):
    reports = tmp_path / "in"
    shutil.copytree(data_dir / "reports", reports)
    (reports / "broken.xml").write_text("<checkstyle><file")
    assert main(["ingest", str(reports), "--out", str(tmp_path / "o")]) == EXIT_PARSE
    assert "broken.xml" in capsys.readouterr().err
    assert main(["ingest", str(reports), "--out", str(tmp_path / "o"), "--keep-going"]) == EXIT_OK
    report = json.loads((tmp_path / "o" / "ingest" / "ingest-report.json").read_text())
    assert [f["path"] for f in report["failed"]] == ["in/broken.xml"]
    assert len(report["files"]) == 5


@pytest.mark.parametrize("step", ["analyze", "rank", "report"])
def test_missing_stage(tmp_path, step, capsys):
    assert main([step, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "not found" in capsys.readouterr().err


def test_bad_settings(tmp_path, minicorpus):
    assert main(["ingest", str(minicorpus), "--out", str(tmp_path), "--alpha", "1.5"]) == EXIT_CONFIG
    assert main(["ingest", str(minicorpus), "--out", str(tmp_path), "--severity-map", str(tmp_path / "nope.json")]) == EXIT_CONFIG
    with pytest.raises(SystemExit):
        main(["ingest", "--cutoff-mode", "round"])


def test_small_fixture_runs_through(tmp_path, data_dir):
    out = tmp_path / "o"
    assert main(["run", str(data_dir / "reports"), "--out", str(out), "--deterministic"]) == EXIT_OK
    # no smell-free package here, so the NCO ranker is noted and skipped
    notes = json.loads((out / "rank" / "rank-summary.json").read_text())["notes"]
    assert any("NCO" in n for n in notes)
    assert (out / "report" / "summary.txt").is_file()


# -- configuration ----------------------------------------------------------------


def test_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"alpha": 0.1, "jobs": 2, "cutoff_mode": "floor"}))
    env = {"SMELLWARN_ALPHA": "0.2", "SMELLWARN_ROOTS": "x", "SMELLWARN_SOURCE_ROOTS": "a, b"}
    with pytest.raises(ConfigError):
        load_config({}, str(cfg_file), env)  # SMELLWARN_ROOTS is not a setting name
    env.pop("SMELLWARN_ROOTS")
    cfg = load_config({"alpha": 0.01}, str(cfg_file), env)
    assert (cfg.alpha, cfg.jobs, cfg.cutoff_mode, cfg.source_roots) == (0.01, 2, "floor", ["a", "b"])
    cfg = load_config({}, str(cfg_file), env)
    assert cfg.alpha == 0.2
    assert load_config({}, None, {"SMELLWARN_CONFIG": str(cfg_file)}).alpha == 0.1
    assert load_config({}, None, {}) == RunConfig()


@pytest.mark.parametrize(
    "doc", [[1, 2], {"alpha": {"nested": 1}}, {"unknown": 1}, {"jobs": "many"}, {"deterministic": "maybe"}]
)
def test_bad_config_files(tmp_path, doc):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        load_config({}, str(p), {})


def test_env_flag_through_main(tmp_path, minicorpus, monkeypatch):
    monkeypatch.setenv("SMELLWARN_DETERMINISTIC", "true")
    assert main(["ingest", str(minicorpus), "--out", str(tmp_path)]) == EXIT_OK
    meta = json.loads((tmp_path / "ingest" / "ingest-report.json").read_text())["meta"]
    assert "generated" not in meta


def test_synth_subcommand(tmp_path):
    out = tmp_path / "corpus"
    assert main(["synth", "--out", str(out), "--seed", "4", "--projects", "2", "--packages", "10"]) == EXIT_OK
    a = json.loads((out / "project1" / "manifest.json").read_text())
    assert a["seed"] == 4 and json.loads((out / "project2" / "manifest.json").read_text())["seed"] == 5
    assert main(["run", str(out), "--out", str(tmp_path / "w"), "--deterministic"]) == EXIT_OK
    profiles = (tmp_path / "w" / "ingest" / "profiles.csv").read_text()
    assert "org.synth.project1.p000" in profiles and "org.synth.project2.p000" in profiles
    bad = tmp_path / "spec.json"
    bad.write_text(json.dumps({"combo_mix": {"NCO": 0.5}}))
    assert main(["synth", "--out", str(out), "--spec", str(bad)]) == EXIT_CONFIG


def test_insufficient_data_is_per_table(tmp_path):
    corpus = tmp_path / "c"
    assert main(["synth", "--out", str(corpus), "--packages", "2"]) == EXIT_OK
    out = tmp_path / "w"
    assert main(["ingest", str(corpus), "--out", str(out)]) == EXIT_OK
    assert main(["analyze", "--out", str(out)]) == EXIT_OK
    errors = json.loads((out / "analysis" / "summary.json").read_text())["errors"]
    assert "correlation" in errors

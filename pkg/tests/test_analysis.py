import numpy as np
import pytest

from taintmut.analysis import AnalyzerConfig, TaintAnalyzer, analyze, brute_force_oracle, fingerprint
from taintmut.app_model import parse
from taintmut.errors import PathBudgetExceeded
from taintmut.mutators import apply_add, apply_aps, apply_cs

from conftest import fixture_model

FI = AnalyzerConfig.from_spec("flow-insensitive")
FS = AnalyzerConfig.from_spec("flow-sensitive")
PS = AnalyzerConfig.from_spec("flow-sensitive,path-sensitive")
NS = AnalyzerConfig.from_spec("flow-sensitive,name-summary")


def test_flow_listing():
    m = fixture_model("listing_flow.groovy")
    r = analyze(m, FI)
    assert [(f.kind, f.source) for f in r.findings] == [("Sms", "people")]
    assert analyze(m, FS).findings == ()


def test_path_listing_two_paths():
    m = fixture_model("listing_path.groovy")
    r = analyze(m, PS)
    assert r.reports_paths
    listed = {p.trace: p.tainted for p in r.paths}
    assert len(listed) == 2
    branch_line = m.line_of(m.branches()[0].span.start)
    assert listed[((branch_line, "T"),)] is True
    assert listed[((branch_line, "F"),)] is False


def test_context_listing():
    m = fixture_model("listing_context.groovy")
    assert analyze(m, FS).findings == ()
    r = analyze(m, NS)
    assert [(f.kind, f.source) for f in r.findings] == [("Sms", "people")]


def test_config_spec_parsing():
    assert FI.flow == "insensitive" and FI.path == "insensitive"
    assert AnalyzerConfig.from_spec("path-sensitive").flow == "sensitive"
    assert AnalyzerConfig.from_spec("depth-2,state").inline_depth == 2
    with pytest.raises(ValueError):
        AnalyzerConfig.from_spec("bogus")
    with pytest.raises(ValueError):
        AnalyzerConfig(flow="insensitive", path="sensitive")


def test_oracle_straight_line_flow2():
    flow1, flow2 = apply_add(fixture_model("listing_flow.groovy"), "Sms")
    truth = brute_force_oracle(parse(flow2.text))
    paths = truth.function_paths("eventHandler")
    assert len(paths) == 1 and paths[0].tainted
    assert brute_force_oracle(parse(flow1.text)).verdict == "clean"


def test_oracle_aps_two_paths_one_tainted():
    _, mutant = apply_aps(fixture_model("listing_structure.groovy"), "1_1")
    truth = brute_force_oracle(parse(mutant.text))
    host = truth.function_paths("installed")
    assert len(host) == 2
    assert sum(p.tainted for p in host) == 1


def test_oracle_context_base_all_benign():
    base, _ = apply_cs(fixture_model("listing_cs.groovy"), "Sms")
    assert not any(p.tainted for p in brute_force_oracle(parse(base.text)).paths)


def _many_branches(n):
    body = "".join(f"  if (state.c{i}) {{\n    x = {i}\n  }}\n" for i in range(n))
    return parse('preferences {\n  section("s") {\n    input "p", "text"\n  }\n}\n\ndef f() {\n' + body + '  sendPush("$p")\n}\n')


def test_oracle_budget():
    with pytest.raises(PathBudgetExceeded):
        brute_force_oracle(_many_branches(6), budget=16)
    assert len(brute_force_oracle(_many_branches(4), budget=16).paths) == 16


def test_analyzer_degrades_over_budget():
    m = _many_branches(6)
    cfg = AnalyzerConfig(path="sensitive", path_budget=8)
    r = analyze(m, cfg)
    assert r.degraded == ("f",)
    assert r.tainted
    with pytest.raises(PathBudgetExceeded):
        analyze(m, cfg, strict=True)


def test_fingerprint_canonical():
    assert fingerprint([("Sms", "b"), ("Sms", "a"), ("Sms", "a")]) == "Sms:a;Sms:b"
    assert fingerprint([]) == ""
    fp = fingerprint([("Sms", "a")], [("f", "Sms", 9, True), ("f", "Sms", 9, False)])
    assert fp == "Sms:a|Sms:2:1"


def test_native_output_format():
    text = analyze(fixture_model("listing_path.groovy"), PS).to_native()
    lines = text.splitlines()
    assert lines[0] == "VERDICT tainted"
    assert any(ln.startswith("FINDING Sms people") for ln in lines)
    assert sum(ln.startswith("PATH presence") for ln in lines) == 2


def test_estimator_predict():
    apps = [fixture_model("listing_flow.groovy"), fixture_model("listing_path.groovy")]
    fi = TaintAnalyzer.from_spec("flow-insensitive").fit(apps)
    assert list(fi.predict(apps)) == ["vulnerable", "vulnerable"]
    fs = fi.set_params(flow="sensitive")
    assert list(fs.predict(apps)) == ["benign", "vulnerable"]
    assert isinstance(fs.predict(apps), np.ndarray)
    assert list(fs.classes_) == ["benign", "vulnerable"]
    assert fs.score(apps, ["benign", "vulnerable"]) == 1.0


def test_estimator_accepts_text():
    text = fixture_model("listing_flow.groovy").text
    assert TaintAnalyzer(flow="insensitive").fit().predict([text])[0] == "vulnerable"


def test_state_sources_flag():
    m = parse('def f() {\n  def m = state.last\n  sendPush(m)\n}\n')
    assert not analyze(m, FS).tainted
    assert analyze(m, AnalyzerConfig(state_sources=True)).tainted
    assert brute_force_oracle(m, state_sources=True).tainted


def test_soundness_and_monotonicity_over_all_artifacts(full_store):
    for rec in full_store.query():
        m = parse(full_store.text_of(rec), rec.source_app)
        oracle_tainted = brute_force_oracle(m).tainted
        ps = analyze(m, PS)
        assert ps.tainted == oracle_tainted, rec.output_path
        fi = {(f.kind, f.source, f.line) for f in analyze(m, FI).findings}
        fs = {(f.kind, f.source, f.line) for f in analyze(m, FS).findings}
        assert fi >= fs, rec.output_path


def test_path_counts_match_oracle(full_store):
    for rec in full_store.query(category="path", role="mutant"):
        m = parse(full_store.text_of(rec), rec.source_app)
        pt = rec.path_truth
        through = lambda trace, line: line == pt["sink_line"] and pt["branch_line"] in dict(trace)
        listed = [p for p in analyze(m, PS).paths if through(p.trace, p.line)]
        enumerated = [p for p in brute_force_oracle(m).paths if any(through(p.trace, s.line) for s in p.sinks)]
        assert len(listed) == len(enumerated), rec.output_path
        assert {dict(p.trace)[pt["branch_line"]] for p in listed} == {"T", "F"}, rec.output_path
        assert len(pt["paths"]) == 2

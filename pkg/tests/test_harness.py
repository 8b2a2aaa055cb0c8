import json
import sys
import textwrap

import pytest

from taintmut.errors import SpawnFailure
from taintmut.harness import (
    RESULTS, Outcome, PathTally, ToolAdapter, ToolRun, builtin_adapter, classify_pairwise, classify_per_file,
    evaluate, extract, load_adapters, read_results, resolve_tools, run, score_paths,
)
from taintmut.mutators import PathLabel, PathTruth, apply_add

from conftest import fixture_model


def stub(tmp_path, body, name="tool.py"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return path


def adapter_for(script, **kw):
    return ToolAdapter(kw.pop("name", "stub"), (sys.executable, str(script), "{file}"), **kw)


@pytest.fixture
def groovy(tmp_path):
    p = tmp_path / "app.groovy"
    p.write_text('def f() {\n  sendPush("hi")\n}\n')
    return p


def test_builtin_on_flow2_is_tainted(tmp_path):
    _, flow2 = apply_add(fixture_model("listing_flow.groovy"), "Sms")
    p = tmp_path / "flow2.groovy"
    p.write_text(flow2.text)
    r = run(builtin_adapter("flow-sensitive"), p, "m1")
    assert r.verdict == "tainted" and r.fingerprint == "Sms:people"
    assert r.exit_status == 0 and r.raw_output.startswith("VERDICT tainted")


def test_timeout(tmp_path, groovy):
    script = stub(tmp_path, "import time\ntime.sleep(10)\n")
    r = run(adapter_for(script, timeout=1), groovy)
    assert r.verdict == "timeout" and r.wall_time >= 1 and r.fingerprint == ""
    assert classify_per_file(r, "vulnerable") is Outcome.NOT_EXECUTED


def test_nonzero_exit_is_error(tmp_path, groovy):
    script = stub(tmp_path, "import sys\nprint('VERDICT tainted')\nsys.exit(3)\n")
    r = run(adapter_for(script), groovy)
    assert r.verdict == "error" and r.exit_status == 3 and r.fingerprint == ""


def test_unrecognized_output_is_error(tmp_path, groovy):
    script = stub(tmp_path, "print('something else')\n")
    assert run(adapter_for(script), groovy).verdict == "error"


def test_spawn_failure(groovy):
    bad = ToolAdapter("missing", ("/nonexistent/tool-binary", "{file}"))
    with pytest.raises(SpawnFailure):
        run(bad, groovy)


def test_tool_runs_in_scratch_dir(tmp_path, groovy):
    script = stub(tmp_path, "import os, sys\nopen('junk.txt', 'w').write('x')\nprint('VERDICT clean')\n")
    r = run(adapter_for(script), groovy)
    assert r.verdict == "clean"
    assert not (tmp_path / "junk.txt").exists()


def test_custom_patterns(tmp_path, groovy):
    script = stub(tmp_path, "print('Result: VULNERABLE')\nprint('flow: location -> sendSms')\n")
    a = adapter_for(script, tainted_pattern=r"VULNERABLE", clean_pattern=r"SAFE",
                    finding_pattern=r"flow: (?P<source>\w+) -> (?P<kind>\w+)")
    r = run(a, groovy)
    assert r.verdict == "tainted" and r.fingerprint == "sendSms:location"


def test_tainted_without_findings_uses_verdict():
    a = ToolAdapter("x", ("t", "{file}"), tainted_pattern="BAD", finding_pattern=None)
    assert extract(a, "BAD\n", 0)[:2] == ("tainted", "tainted")


def test_file_placeholder_required():
    with pytest.raises(ValueError):
        ToolAdapter("x", ("tool",))
    with pytest.raises(ValueError):
        ToolAdapter("x", ("tool", "{file}", "{file}"))
    with pytest.raises(ValueError):
        ToolAdapter("x", ("tool", "{file}"), timeout=0)


def test_load_adapters(tmp_path):
    cfg = tmp_path / "tools.yaml"
    cfg.write_text(
        "name: saint\ncommand: saint-cli --input {file}\ntimeout: 30\n"
        "---\nname: other\nargv: [other, '{file}']\ntainted_pattern: LEAK\nenv: {MODE: fast}\n"
    )
    a, b = load_adapters(cfg)
    assert a.argv == ("saint-cli", "--input", "{file}") and a.timeout == 30
    assert b.tainted_pattern == "LEAK" and b.env == {"MODE": "fast"}
    tools = resolve_tools(["other", "builtin:flow-insensitive"], [a, b])
    assert [t.name for t in tools] == ["other", "builtin:flow-insensitive"]
    with pytest.raises(ValueError):
        resolve_tools(["unknown"], [a, b])


def _run(verdict, fp=""):
    return ToolRun("t", "m", 0, "", 0.0, verdict, fp)


@pytest.mark.parametrize("truth,verdict,outcome", [
    ("vulnerable", "tainted", Outcome.KILLED),
    ("vulnerable", "clean", Outcome.LIVE),
    ("benign", "clean", Outcome.TRUE_NEGATIVE),
    ("benign", "tainted", Outcome.FALSE_POSITIVE),
    ("vulnerable", "timeout", Outcome.NOT_EXECUTED),
    ("benign", "error", Outcome.NOT_EXECUTED),
])
def test_classify_per_file(truth, verdict, outcome):
    assert classify_per_file(_run(verdict, "x" if verdict == "tainted" else ""), truth) is outcome


def test_classify_pairwise():
    same = _run("tainted", "Sms:people")
    assert classify_pairwise(same, same, "benign", "vulnerable") is Outcome.LIVE
    assert classify_pairwise(_run("clean"), same, "benign", "vulnerable") is Outcome.KILLED
    assert classify_pairwise(_run("clean"), _run("clean"), "benign", "benign") is Outcome.TRUE_NEGATIVE
    assert classify_pairwise(same, same, "benign", "benign") is Outcome.FALSE_POSITIVE
    assert classify_pairwise(_run("timeout"), same, "benign", "vulnerable") is Outcome.NOT_EXECUTED


def test_outcome_cells():
    assert [o.cell for o in Outcome] == ["K", "L", "FP", "TN", "NE"]


TRUTH = PathTruth(10, 20, (PathLabel("then", True), PathLabel("else", False)))
BENIGN = PathTruth(10, 20, (PathLabel("then", False), PathLabel("else", False)))


def test_score_paths_non_path_tool():
    assert score_paths(_run("tainted", "x"), TRUTH, False) == PathTally(tp=1, fp=1)
    assert score_paths(_run("clean"), BENIGN, False) == PathTally(tn=2)
    assert score_paths(_run("timeout"), TRUTH, False) == PathTally()


def test_score_paths_path_tool():
    paths = (("f", ((10, "T"),), "Sms", 20, True), ("f", ((10, "F"),), "Sms", 20, False))
    r = ToolRun("t", "m", 0, "", 0.0, "tainted", "x", paths)
    assert score_paths(r, TRUTH, True) == PathTally(tp=1, tn=1)
    assert PathTally(1, 0, 0, 1) + PathTally(0, 1, 1, 0) == PathTally(1, 1, 1, 1)


def test_evaluate_writes_results(full_store, tmp_path):
    tools = [builtin_adapter("flow-insensitive"), builtin_adapter("flow-sensitive")]
    rows = evaluate(full_store, tools, "pairwise", tmp_path, workers=4, operators=["AMfs"])
    assert rows and {r.tool for r in rows} == {t.name for t in tools}
    by_tool = {t.name: {r.outcome for r in rows if r.tool == t.name} for t in tools}
    assert by_tool == {"builtin:flow-insensitive": {"Live"}, "builtin:flow-sensitive": {"Killed"}}
    assert read_results(tmp_path / RESULTS) == rows
    assert len(list((tmp_path / "builtin_flow-sensitive").glob("*.out"))) == len(rows)


def test_evaluate_per_file_deterministic(full_store, tmp_path):
    tools = [builtin_adapter("flow-sensitive,path-sensitive")]
    a = evaluate(full_store, tools, "per-file", tmp_path / "a", operators=["Aps"])
    b = evaluate(full_store, tools, "per-file", tmp_path / "b", workers=8, operators=["Aps"])
    assert (tmp_path / "a" / RESULTS).read_bytes() == (tmp_path / "b" / RESULTS).read_bytes()
    assert a == b


def test_evaluate_spawn_failure_rows(full_store, tmp_path):
    bad = ToolAdapter("missing", ("/nonexistent/tool-binary", "{file}"))
    rows = evaluate(full_store, [bad], "per-file", tmp_path, operators=["AMcs"])
    assert rows and all(r.spawn_failed and r.outcome == "NotExecuted" for r in rows)


def test_evaluate_path_effect_tallies(full_store, tmp_path):
    rows = evaluate(full_store, [builtin_adapter("flow-sensitive,path-sensitive")], "path-effect", tmp_path,
                    operators=["Aps"], variants=["1_1"])
    assert rows
    for r in rows:
        assert r.tally == {"tp": 1, "fp": 0, "fn": 0, "tn": 1}


def test_evaluate_rejects_mode(full_store, tmp_path):
    with pytest.raises(ValueError):
        evaluate(full_store, [], "bogus", tmp_path)


def test_result_json_roundtrip(full_store, tmp_path):
    rows = evaluate(full_store, [builtin_adapter("flow-sensitive")], "per-file", tmp_path, operators=["APcs"])
    line = (tmp_path / RESULTS).read_text().splitlines()[0]
    assert json.loads(line)["tool"] == "builtin:flow-sensitive"
    assert rows[0].to_json() == line

"""Acceptance criteria 1-10, one test each; every test prints a PASS/FAIL line."""

import io
import json
import sys
import textwrap
import time
from fractions import Fraction

import pytest

from taintmut.analysis import analyze, brute_force_oracle
from taintmut.app_model import emit, parse
from taintmut.cli import main
from taintmut.harness import Outcome, PathTally, ToolAdapter, builtin_adapter, evaluate
from taintmut.metrics import display, mean, overall, per_operator
from taintmut.mutators import diff_hunks, generate, path_group
from taintmut.store import MANIFEST
from taintmut.validation import OPERATORS

FI = builtin_adapter("flow-insensitive")
FS = builtin_adapter("flow-sensitive")
PS = builtin_adapter("flow-sensitive,path-sensitive")
CS = builtin_adapter("flow-sensitive,call-site")
NS = builtin_adapter("flow-sensitive,name-summary")
FLOW_ADD = ["AMfs", "APfs", "AHfs"]


@pytest.fixture
def verdict(capsys):
    def emit_line(n, label, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {n:>2} {'PASS' if ok else 'FAIL'}: {label}" + (f" ({detail})" if detail else ""))
        assert ok, f"criterion {n} failed: {detail}"
    return emit_line


def pr(rows):
    row = per_operator(Outcome(r.outcome) for r in rows)
    return row.recall, row.precision


def test_c01_round_trip(bundled, verdict):
    start = time.perf_counter()
    bad = [a.id for a in bundled if emit(parse(a.text, a.id)) != a.text]
    elapsed = time.perf_counter() - start
    ok = len(bundled) >= 12 and not bad and elapsed < 1.0
    verdict(1, "emit(parse(t)) == t on the bundled corpus", ok,
            f"{len(bundled)} apps, {len(bad)} mismatches, {elapsed:.3f}s")


def test_c02_single_fault(eligible_models, verdict):
    start = time.perf_counter()
    checked, wrong = 0, []
    for m in eligible_models:
        for op in OPERATORS:
            for outcome in generate(m, op):
                for art in outcome.artifacts:
                    checked += 1
                    if diff_hunks(m.text, art.text) != art.expected_hunks:
                        wrong.append((m.name, op, art.variant, art.role))
    elapsed = time.perf_counter() - start
    ok = checked > 0 and not wrong and elapsed < 5.0
    verdict(2, "diff-hunk shape of every artifact, all 13 operators", ok,
            f"{checked} artifacts, {len(wrong)} wrong, {elapsed:.2f}s")


def test_c03_oracle_agreement(full_store, verdict):
    recs = full_store.query()
    disagree = []
    for rec in recs:
        got = brute_force_oracle(parse(full_store.text_of(rec), rec.source_app)).verdict
        if got != ("tainted" if rec.ground_truth == "vulnerable" else "clean"):
            disagree.append(rec.output_path)
    verdict(3, "oracle verdict == recorded ground truth", bool(recs) and not disagree,
            f"{len(recs)} artifacts, {len(disagree)} disagreements")


def test_c04_flow_per_file(full_store, tmp_path, verdict):
    rows = evaluate(full_store, [FI, FS], "per-file", tmp_path, operators=FLOW_ADD)
    fi = pr(r for r in rows if r.tool == FI.name)
    fs = pr(r for r in rows if r.tool == FS.name)
    ok = fi == (1, Fraction(1, 2)) and fs == (1, 1)
    verdict(4, "per-file flow: insensitive 100/50, sensitive 100/100", ok,
            f"insensitive {display(fi[0])}/{display(fi[1])}, sensitive {display(fs[0])}/{display(fs[1])}")


def test_c05_flow_pairwise(full_store, tmp_path, verdict):
    rows = evaluate(full_store, [FI, FS], "pairwise", tmp_path, operators=FLOW_ADD)
    fi = pr(r for r in rows if r.tool == FI.name)
    fs = pr(r for r in rows if r.tool == FS.name)
    ok = fi[0] == 0 and display(fi[1]) == "0.0" and fs == (1, 1)
    verdict(5, "pairwise flow: insensitive 0/0, sensitive 100/100", ok,
            f"insensitive {display(fi[0])}/{display(fi[1])}, sensitive {display(fs[0])}/{display(fs[1])}")


def test_c06_path_effect(full_store, tmp_path, verdict):
    path_ops = ["Aps", "AMps", "APps", "AHps"]
    # expected verdicts come from the oracle first
    for rec in full_store.query(category="path", role="mutant"):
        truth = brute_force_oracle(parse(full_store.text_of(rec), rec.source_app))
        assert truth.project(rec.path_truth["branch_line"], rec.path_truth["sink_line"]) == \
            {p["arm"]: p["tainted"] for p in rec.path_truth["paths"]}
    rows = evaluate(full_store, [FS, PS], "path-effect", tmp_path, operators=path_ops)
    rows = [r for r in rows if r.role == "mutant"]

    def tally(tool, keep):
        return per_operator([PathTally(**r.tally) for r in rows if r.tool == tool and keep(r)])

    g1_aps = tally(FS.name, lambda r: r.operator == "Aps" and path_group(r.operator, r.variant) == 1)
    g3 = [r for r in rows if r.tool == FS.name and path_group(r.operator, r.variant) == 3]
    g3_ok = all((r.tally["fp"] == 2 and r.tally["tp"] == 0) if r.verdict == "tainted" else r.tally["tn"] == 2
                for r in g3)
    g3_clean = sum(r.verdict == "clean" for r in g3)
    ps_groups = {g: tally(PS.name, lambda r, g=g: path_group(r.operator, r.variant) == g) for g in (1, 2, 3)}
    ps_ok = all(ps_groups[g].recall == 1 and ps_groups[g].precision == 1 for g in (1, 2)) and \
        ps_groups[3].fp == 0 and ps_groups[3].fn == 0 and ps_groups[3].tn > 0
    ok = (g1_aps.recall, g1_aps.precision) == (1, Fraction(1, 2)) and g3 and g3_ok and ps_ok
    verdict(6, "path-effect: insensitive Group 1 100/50, Group 3 TN/FP rule, path-sensitive exact", ok,
            f"Aps G1 {display(g1_aps.recall)}/{display(g1_aps.precision)}, G3 clean {g3_clean}/{len(g3)}, "
            f"path-sensitive G1 {display(ps_groups[1].recall)}/{display(ps_groups[1].precision)} "
            f"G2 {display(ps_groups[2].recall)}/{display(ps_groups[2].precision)} "
            f"G3 FP={ps_groups[3].fp} FN={ps_groups[3].fn} TN={ps_groups[3].tn}")


def test_c07_context(full_store, tmp_path, verdict):
    ctx = ["AMcs", "APcs", "AHcs"]
    pairs = evaluate(full_store, [CS], "pairwise", tmp_path / "pw", operators=ctx)
    cs = pr(pairs)
    kills = sum(r.outcome == "Killed" for r in pairs)
    bases = [r for r in full_store.query(category="context", role="base")]
    assert all(brute_force_oracle(parse(full_store.text_of(r))).verdict == "clean" for r in bases)
    per_file = evaluate(full_store, [NS], "per-file", tmp_path / "pf", operators=ctx, role="base")
    fps = sum(r.outcome == "FalsePositive" for r in per_file)
    ok = bool(pairs) and cs == (1, 1) and kills == len(pairs) and fps >= 1
    verdict(7, "context: call-site kills all pairs 100/100, name-summary FP on bases", ok,
            f"{kills}/{len(pairs)} killed, call-site {display(cs[0])}/{display(cs[1])}, name-summary FP {fps}")


def test_c08_metric_arithmetic(verdict):
    F = Fraction
    rec, prec = overall([(F(1), F(50, 100)), (F(1), F(37, 100)), (F(1), F(833, 1000))])
    r2 = mean([F(1), F(1), F(9688, 10000)])
    row = per_operator({"TP": 81, "FN": 0, "FP": 81})
    ok = (display(rec), display(prec)) == ("100.0", "56.8") and display(r2) == "99.0" and \
        (row.recall, row.precision) == (1, F(1, 2))
    verdict(8, "metric arithmetic", ok,
            f"overall {display(rec)}/{display(prec)}, recall mean {display(r2)}, "
            f"per-operator {display(row.recall)}/{display(row.precision)}")


STUB = textwrap.dedent("""\
    import json, sys, time
    plan = json.load(open(sys.argv[1]))[sys.argv[2]]
    if plan["hang"]:
        time.sleep(60)
    sys.stdout.write(plan["output"])
""")


def test_c09_exclusion(full_store, tmp_path, verdict):
    flow = sorted(full_store.query(category="flow"), key=lambda r: r.mutant_id)
    hang = {r.mutant_id for r in flow[:26]}
    plan = {}
    for rec in flow:
        path = str(full_store.path_of(rec).resolve())
        out = _native(full_store, rec)
        plan[path] = {"hang": rec.mutant_id in hang, "output": out}
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    (tmp_path / "stub.py").write_text(STUB)
    stub = ToolAdapter("stub", (sys.executable, str(tmp_path / "stub.py"), str(tmp_path / "plan.json"), "{file}"),
                       timeout=1.0)
    rows = evaluate(full_store, [stub], "per-file", tmp_path / "res", workers=13, category="flow")
    excluded = [r for r in rows if r.outcome == "NotExecuted"]
    row = per_operator(Outcome(r.outcome) for r in rows)
    reference = per_operator(Outcome(r.outcome) for r in
                             evaluate(full_store, [FS], "per-file", tmp_path / "ref", category="flow")
                             if r.mutant_id not in hang)
    ok = (len(excluded) == 26 and {r.mutant_id for r in excluded} == hang and row.excluded == 26
          and row.executed == len(flow) - 26 and (row.tp, row.fp, row.fn, row.tn) ==
          (reference.tp, reference.fp, reference.fn, reference.tn))
    verdict(9, "timeouts on 26 flow mutants are NotExecuted and excluded", ok,
            f"{len(excluded)} excluded, {row.executed} scored, recall {display(row.recall)} "
            f"precision {display(row.precision)}")


def _native(store, rec):
    return analyze(parse(store.text_of(rec), rec.source_app), FS.config).to_native()


def _pipeline(root):
    out = io.StringIO()
    codes = [
        main(["generate", "--out", str(root), "--seed", "7", "--size", "8", "--workers", "4"], out),
        main(["evaluate", "--out", str(root), "--tool", FI.name, "--tool", PS.name, "--workers", "4"], out),
        main(["report", "--out", str(root)], out),
    ]
    return codes


def test_c10_determinism(tmp_path, verdict):
    a, b = tmp_path / "a", tmp_path / "b"
    codes = _pipeline(a) + _pipeline(b)
    files = [MANIFEST, "results/results.jsonl", "results/report.csv"]
    same = {f: (a / f).read_bytes() == (b / f).read_bytes() for f in files}
    ok = codes == [0] * 6 and all(same.values()) and (a / MANIFEST).stat().st_size > 0
    verdict(10, "two --seed 7 runs give byte-identical outputs", ok,
            ", ".join(f"{f}: {'same' if s else 'differs'}" for f, s in same.items()))

import re

import pytest

from taintmut.app_model import AppModel, Edit, SinkKind, emit, parse, tokenize
from taintmut.app_model.nodes import Name, Opaque
from taintmut.errors import EmptyInput, UnbalancedDelimiter

from conftest import fixture_model, fixture_text


def test_structure_of_smartapp_skeleton():
    m = fixture_model("listing_structure.groovy")
    assert m.definition is not None
    assert len(m.sections()) == 1
    assert [f.name for f in m.functions] == ["installed", "updated", "initialize"]
    assert [i.name for i in m.inputs()] == ["themotion"]


def test_empty_input_rejected():
    with pytest.raises(EmptyInput):
        parse("")


@pytest.mark.parametrize("text", ["def f() {\n  foo(\n}\n", "def f() {\n  x = [1, 2\n", "}\n"])
def test_unbalanced_delimiters(text):
    with pytest.raises(UnbalancedDelimiter):
        parse(text)


def test_unknown_annotation_kept_verbatim():
    text = '@SomeAnnotation(value = "x")\ndef handler(evt) {\n  log.debug "hi"\n}\n'
    m = parse(text)
    assert emit(m) == text
    assert m.function_named("handler") is not None


def test_unsupported_statements_are_opaque_but_lossless():
    text = 'def f() {\n  while (true) { break }\n  synchronized (this) { x = 1 }\n}\n'
    m = parse(text)
    assert emit(m) == text
    assert any(isinstance(n, Opaque) for n in m.module.walk())


def test_round_trip_bundled(bundled):
    for app in bundled:
        assert emit(parse(app.text, app.id)) == app.text


def test_lexer_tokens_cover_text():
    text = fixture_text("listing_path.groovy")
    toks = tokenize(text)
    assert "".join(t.text for t in toks) == text
    assert all(a.end == b.start for a, b in zip(toks, toks[1:]))


def test_spans_slice_to_node_text(bundled):
    for app in bundled:
        m = app.model()
        for node in m.module.walk():
            assert 0 <= node.start <= node.end <= len(m.text)
            kids = list(node.children())
            for a, b in zip(kids, kids[1:]):
                assert a.end <= b.start


def test_inputs_of_flow_listing():
    m = fixture_model("listing_flow.groovy")
    assert [(i.name, i.capability) for i in m.inputs()] == [("people", "capability.presenceSensor")]


def test_inputs_without_preferences():
    assert parse('def f() {\n  log.debug "x"\n}\n').inputs() == []


def test_inputs_match_independent_scan():
    text = (
        "preferences {\n"
        '  section("a") {\n    input "a1", "capability.switch"\n    input "a2", "capability.lock"\n  }\n'
        '  section("b") {\n    input "b1", "number", title: "n"\n  }\n'
        '  section("c") {\n    input "c1", "capability.motionSensor", required: false\n  }\n'
        "}\n"
    )
    names = [i.name for i in parse(text).inputs()]
    assert names == re.findall(r'input "(\w+)"', text)
    assert len(names) == 4


def test_sinks_of_flow_listing():
    m = fixture_model("listing_flow.groovy")
    sinks = m.sinks()
    assert len(sinks) == 1
    s = sinks[0]
    assert s.kind is SinkKind.SMS and s.function == "eventHandler"
    assert isinstance(s.payload, Name) and s.payload.name == "messages"


def test_sms_spellings_both_recognized():
    m = parse('def f() {\n  sendSMS("1", a)\n  sendSms("1", b)\n}\n')
    assert [s.kind for s in m.sinks()] == [SinkKind.SMS, SinkKind.SMS]
    assert SinkKind.SMS.function == "sendSms"


def test_no_sinks():
    assert fixture_model("listing_structure.groovy").sinks() == []


def test_http_sink_inside_try():
    text = (
        "def f() {\n"
        '  def takeParams = [uri: "https://example.com", path: "", body: ["k": "v"]]\n'
        "  try {\n"
        "    httpPost(takeParams) { resp ->\n"
        '      log.debug "ok"\n'
        "    }\n"
        "  } catch (Exception e) {\n"
        '    log.error "failed"\n'
        "  }\n"
        "}\n"
    )
    sinks = parse(text).sinks(SinkKind.HTTP)
    assert len(sinks) == 1
    assert isinstance(sinks[0].payload, Name) and sinks[0].payload.name == "takeParams"


def test_branch_with_else():
    m = fixture_model("listing_apps.groovy")
    branches = m.branches()
    assert len(branches) == 1 and branches[0].has_else and branches[0].function == "deviceHandler"


def test_no_branches():
    assert fixture_model("listing_flow.groovy").branches() == []


def test_nested_branches_outer_first():
    text = "def f(a, b) {\n  if (a) {\n    if (b) {\n      x = 1\n    }\n  }\n}\n"
    bs = parse(text).branches()
    assert len(bs) == 2
    assert bs[0].span.start < bs[1].span.start
    assert bs[0].span.end > bs[1].span.end


def test_clonable_call_in_context_listing():
    m = fixture_model("listing_cs.groovy")
    calls = m.clonable_calls()
    assert [c.callee.name for c in calls] == ["getDeviceCapabilityCommands"]


def test_platform_calls_not_clonable():
    assert parse('def f() {\n  def t = now()\n  def d = getSunriseAndSunset()\n}\n').clonable_calls() == []


def test_two_clonable_calls_in_order():
    text = "def a() {\n  def x = g(1)\n  def y = h(2)\n}\n\ndef g(v) {\n  return v\n}\n\ndef h(v) {\n  return v\n}\n"
    assert [c.callee.name for c in parse(text).clonable_calls()] == ["g", "h"]


def test_lifecycle_lookup():
    m = fixture_model("listing_structure.groovy")
    assert m.lifecycle_fn("installed").name == "installed"
    assert parse("def installed() {\n}\n").lifecycle_fn("updated") is None


def test_duplicate_definitions_first_wins():
    text = "def updated() {\n  a()\n}\n\ndef updated() {\n  b()\n}\n"
    m = parse(text)
    assert len(m.definitions("updated")) == 2
    assert m.lifecycle_fn("updated").start == 0


def test_single_edit_is_one_line_diff():
    m = fixture_model("listing_flow.groovy")
    sink = m.sinks()[0]
    at = m.line_start(sink.span.start)
    out = m.apply_edits([Edit(at, at, '  messages = "${people}"\n')])
    before, after = m.text.splitlines(), out.text.splitlines()
    assert len(after) == len(before) + 1
    assert [ln for ln in after if ln not in before] == ['  messages = "${people}"']


def test_queries_are_deterministic(bundled):
    for app in bundled:
        a, b = app.model(), app.model()
        assert [i.name for i in a.inputs()] == [i.name for i in b.inputs()]
        assert [s.span for s in a.sinks()] == [s.span for s in b.sinks()]
        assert [x.span for x in a.branches()] == [x.span for x in b.branches()]


def test_indent_unit_ignores_comment_lines():
    text = "/**\n * doc\n */\ndef f() {\n    x = 1\n}\n"
    assert AppModel(text).indent_unit() == "    "

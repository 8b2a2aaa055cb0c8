"""Round-trip and single-fault properties over generated app texts."""

from hypothesis import given, settings, strategies as st

from taintmut.analysis import brute_force_oracle
from taintmut.app_model import emit, parse, tokenize
from taintmut.errors import TaintMutError
from taintmut.mutators import diff_hunks, generate
from taintmut.validation import OPERATORS

from conftest import synth_app

NAMES = st.from_regex(r"[a-z][a-zA-Z0-9]{0,8}", fullmatch=True)
SPACING = st.sampled_from([" ", "  ", "\t", " \t"])


@st.composite
def app_texts(draw):
    text = synth_app(draw(st.integers(0, 99)), inputs=draw(st.booleans()),
                     branch=draw(st.sampled_from(["ifelse", "if", None])), clonable=draw(st.booleans()))
    if draw(st.booleans()):
        text = text.replace("  ", draw(SPACING))
    if draw(st.booleans()):
        text = text.replace("\n", "\r\n")
    if draw(st.booleans()):
        text = f"// {draw(NAMES)}\n/* {draw(NAMES)} */\n" + text
    return text


@settings(max_examples=60, deadline=None)
@given(app_texts())
def test_round_trip(text):
    assert emit(parse(text)) == text


@settings(max_examples=40, deadline=None)
@given(app_texts(), st.sampled_from(OPERATORS))
def test_single_fault_and_oracle(text, op):
    m = parse(text, "app")
    for outcome in generate(m, op):
        for art in outcome.artifacts:
            if art.expected_hunks:
                assert diff_hunks(text, art.text) == art.expected_hunks
            out = parse(art.text)
            assert emit(out) == art.text
            want = "tainted" if art.vulnerable else "clean"
            assert brute_force_oracle(out).verdict == want


GROOVYISH = st.sampled_from(list("abc$\"'/\\{}()[]*-+=<>?:;.,\n\t 0129x\u00b2\u00e9#~!&|"))


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=GROOVYISH, max_size=60) | st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40))
def test_lossless_or_rejected_on_arbitrary_text(text):
    try:
        toks = tokenize(text)
        model = parse(text)
    except TaintMutError:
        return
    assert "".join(t.text for t in toks) == text
    assert emit(model) == text

import shutil
from pathlib import Path

import pytest

from taintmut.app_model import AppModel
from taintmut.corpus import bundled_dir, load_bundled, vet_benign
from taintmut.store import MutantStore, populate
from taintmut.validation import OPERATORS

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def fixture_model(name: str) -> AppModel:
    return AppModel(fixture_text(name), Path(name).stem)


def synth_app(i: int, inputs: bool = True, branch: str | None = "ifelse", clonable: bool = False) -> str:
    """Small SmartApp text with a chosen shape: inputs or not, if/else, if-only or no branch."""
    lines = [
        "definition(",
        f'  name: "Synthetic {i}",',
        '  namespace: "test",',
        '  author: "test"',
        ")",
        "",
        "preferences {",
        '  section("Devices") {',
    ]
    if inputs:
        lines.append(f'    input "sensor{i}", "capability.contactSensor", required: true')
    lines += [
        "  }",
        "}",
        "",
        "def installed() {",
        "  initialize()",
        "}",
        "",
        "def updated() {",
        "  unsubscribe()",
        "  initialize()",
        "}",
        "",
        "def initialize() {",
        '  subscribe(location, "mode", handler)',
        "}",
        "",
        "def handler(evt) {",
    ]
    if clonable:
        lines.append("  def level = computeLevel(evt.value)")
    if branch == "ifelse":
        lines += ['  if (evt.value == "open") {', '    log.debug "open"', "  } else {", '    log.debug "closed"', "  }"]
    elif branch == "if":
        lines += ['  if (evt.value == "open") {', '    log.debug "open"', "  }"]
    else:
        lines.append('  log.debug "event"')
    lines.append("}")
    if clonable:
        lines += ["", "def computeLevel(value) {", "  def level = 10", "  return level", "}"]
    return "\n".join(lines) + "\n"


def write_apps(directory: Path, texts: dict[str, str]) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for name, text in texts.items():
        (directory / f"{name}.groovy").write_text(text, encoding="utf-8")
    return directory


@pytest.fixture(scope="session")
def bundled():
    return load_bundled()


@pytest.fixture(scope="session")
def vetted(bundled):
    return vet_benign(bundled)


@pytest.fixture(scope="session")
def eligible_models(vetted):
    return [a.model() for a in vetted.eligible()]


@pytest.fixture(scope="session")
def full_store(tmp_path_factory, eligible_models):
    """Every operator and variant over the eligible bundled apps."""
    store = MutantStore(tmp_path_factory.mktemp("store"))
    populate(store, eligible_models, OPERATORS)
    return store


@pytest.fixture
def corpus_copy(tmp_path):
    dest = tmp_path / "corpus"
    shutil.copytree(bundled_dir(), dest)
    return dest

import json
import threading

import pytest

from taintmut.analysis import brute_force_oracle
from taintmut.app_model import parse
from taintmut.errors import DuplicateRecord, IoFailure
from taintmut.mutators import apply_add
from taintmut.store import MANIFEST, MutantRecord, MutantStore, mutant_id, populate, read_manifest, replay

from conftest import fixture_model


def test_add_pair_persisted(tmp_path):
    store = MutantStore(tmp_path)
    for art in apply_add(fixture_model("listing_flow.groovy"), "Sms", operator="AMfs"):
        store.persist_artifact(art)
    files = sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*.groovy"))
    assert files == ["AMfs/listing_flow/flow1.groovy", "AMfs/listing_flow/flow2.groovy"]
    assert len(read_manifest(tmp_path / MANIFEST)) == 2


def test_not_possible_record(tmp_path):
    store = MutantStore(tmp_path)
    store.persist(MutantRecord.not_possible("app", "MMfs"))
    assert not list(tmp_path.rglob("*.groovy"))
    (rec,) = read_manifest(tmp_path / MANIFEST)
    assert rec.applicability == "not possible" and rec.output_path is None


def test_duplicate(tmp_path):
    store = MutantStore(tmp_path)
    store.persist(MutantRecord.not_possible("app", "MMfs"))
    with pytest.raises(DuplicateRecord):
        store.persist(MutantRecord.not_possible("app", "MMfs"))


def test_duplicate_after_reopen(tmp_path):
    MutantStore(tmp_path).persist(MutantRecord.not_possible("app", "MMfs"))
    with pytest.raises(DuplicateRecord):
        MutantStore(tmp_path).persist(MutantRecord.not_possible("app", "MMfs"))


def test_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    store = MutantStore(blocker / "sub")
    with pytest.raises(IoFailure):
        store.persist(MutantRecord.not_possible("app", "MMfs"))


def test_generated_record_needs_text(tmp_path):
    art = apply_add(fixture_model("listing_flow.groovy"), "Sms")[0]
    with pytest.raises(ValueError):
        MutantStore(tmp_path).persist(MutantRecord.for_artifact(art))


def test_concurrent_persist(tmp_path):
    store = MutantStore(tmp_path)
    threads = [threading.Thread(target=store.persist, args=(MutantRecord.not_possible(f"app{i}", "MMfs"),))
               for i in range(32)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    lines = (tmp_path / MANIFEST).read_text().splitlines()
    assert len(lines) == 32 and all(json.loads(ln) for ln in lines)


def test_manifest_field_order(full_store):
    first = json.loads(full_store.manifest_path.read_text().splitlines()[0])
    assert list(first)[:6] == ["mutant_id", "operator", "variant", "source_app", "role", "ground_truth"]


def test_manifest_sorted(full_store):
    keys = [r.key for r in read_manifest(full_store.manifest_path)]
    assert keys == sorted(keys)


def test_query_flow_category(full_store, eligible_models):
    with_inputs = sum(1 for m in eligible_models if m.inputs())
    assert len(full_store.query(category="flow")) == 2 * with_inputs * 3


def test_query_role(full_store):
    recs = full_store.query(role="flow1")
    assert recs and all(r.ground_truth == "benign" for r in recs)


def test_query_variant(full_store, eligible_models):
    recs = full_store.query(operator="AMps", variant="V1_1")
    apps = {r.source_app for r in recs}
    assert apps and all(any(m.branches() for m in eligible_models if m.name == a) for a in apps)
    assert {r.variant for r in recs} == {"1_1"}


def test_query_excludes_not_possible_by_default(full_store):
    assert all(r.generated for r in full_store.query())
    assert any(not r.generated for r in full_store.query(include_not_possible=True))


def test_ground_truth_matches_oracle(full_store):
    for rec in full_store.query():
        m = parse(full_store.text_of(rec), rec.source_app)
        want = "tainted" if rec.ground_truth == "vulnerable" else "clean"
        assert brute_force_oracle(m).verdict == want, rec.output_path


def test_replay(full_store, eligible_models, tmp_path):
    models = {m.name: m for m in eligible_models}
    rebuilt = replay(full_store.manifest_path, models, tmp_path)
    assert (tmp_path / MANIFEST).read_bytes() == full_store.manifest_path.read_bytes()
    for rec in rebuilt.query():
        assert rebuilt.text_of(rec) == full_store.text_of(rec)


def test_replay_detects_drift(full_store, eligible_models, tmp_path):
    models = {m.name: m for m in eligible_models}
    rec = full_store.query(operator="AMfs")[0]
    m = models[rec.source_app]
    models[rec.source_app] = parse(m.text.replace("def ", "def  ", 1), m.name)
    with pytest.raises(ValueError):
        replay(full_store.manifest_path, models, tmp_path)


def test_populate_independent_of_workers(eligible_models, tmp_path):
    a, b = MutantStore(tmp_path / "a"), MutantStore(tmp_path / "b")
    populate(a, eligible_models, ["Aps", "AMcs"], workers=1)
    populate(b, eligible_models, ["Aps", "AMcs"], workers=8)
    assert a.manifest_path.read_bytes() == b.manifest_path.read_bytes()


def test_mutant_id_stable():
    assert mutant_id("a", "AMfs", "", "flow1") == mutant_id("a", "AMfs", "", "flow1")
    assert len(mutant_id("a", "AMfs", "", "flow1")) == 12


def test_pairs(full_store):
    pairs = full_store.pairs(operator="AMfs")
    assert pairs and all((b.role, m.role) == ("flow1", "flow2") for b, m in pairs)
    pairs = full_store.pairs(operator="AMcs")
    assert pairs and all((b.role, m.role) == ("base", "mutant") for b, m in pairs)

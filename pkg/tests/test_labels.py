import pytest

from railabel.errors import DuplicateLabel, EmptyName, InvalidRequest, NameTooLong
from railabel.labels import LabelRegistry, fold
from railabel.storage import AppendLog


@pytest.fixture
def registry(tmp_path):
    log = AppendLog(tmp_path / "log.jsonl")
    yield LabelRegistry(log)
    log.close()


def test_create_and_list(registry):
    label = registry.create_label("brake wear", "fault_found", "us1")
    assert label.name == "brake wear"
    assert [l.name for l in registry.list_labels("fault_found")] == ["brake wear"]
    assert registry.list_labels("repair_done") == []


def test_name_is_trimmed(registry):
    label = registry.create_label("  brake wear \t", "fault_found", "us1")
    assert label.name == "brake wear"


def test_duplicate_detection_case_and_trim_insensitive(registry):
    registry.create_label("axle defect", "fault_found", "us1")
    for variant in ("axle defect", "Axle Defect", "  AXLE DEFECT  ", "axle DEFECT"):
        with pytest.raises(DuplicateLabel):
            registry.create_label(variant, "fault_found", "us1")
    # same name in another context is fine
    registry.create_label("axle defect", "repair_done", "us1")
    assert len(registry) == 2


def test_name_validation(registry):
    with pytest.raises(EmptyName):
        registry.create_label("", "rail_event", "us1")
    with pytest.raises(EmptyName):
        registry.create_label("   ", "rail_event", "us1")
    with pytest.raises(NameTooLong):
        registry.create_label("x" * 121, "rail_event", "us1")
    registry.create_label("x" * 120, "rail_event", "us1")
    with pytest.raises(InvalidRequest):
        registry.create_label("fine", "bogus_context", "us1")


def test_list_is_alphabetical_case_insensitive(registry):
    for name in ("Wheel flat", "axle defect", "brake wear", "Corrosion"):
        registry.create_label(name, "fault_found", "us1")
    assert [l.name for l in registry.list_labels("fault_found")] == [
        "axle defect",
        "brake wear",
        "Corrosion",
        "Wheel flat",
    ]


def test_seed_defaults_mirrors_into_both_workshop_contexts(registry):
    assert registry.seed_defaults() == 6
    for context in ("fault_found", "repair_done"):
        assert sorted(l.name for l in registry.list_labels(context)) == [
            "axle defect",
            "commutator issue",
            "flat spot",
        ]
    assert registry.list_labels("rail_event") == []


def test_seed_defaults_idempotent(registry):
    assert registry.seed_defaults() == 6
    assert registry.seed_defaults() == 0
    assert len(registry) == 6
    with pytest.raises(DuplicateLabel):
        registry.create_label("Flat Spot", "fault_found", "us1")


def test_seed_fills_gaps_only(registry):
    registry.create_label("axle defect", "fault_found", "us1")
    assert registry.seed_defaults() == 5
    assert len(registry) == 6


def test_fold():
    assert fold("  Axle Defect ") == "axle defect"


def test_persistence_round_trip(tmp_path):
    path = tmp_path / "log.jsonl"
    log = AppendLog(path)
    registry = LabelRegistry(log)
    registry.seed_defaults()
    created = registry.create_label("Chatter Marks", "rail_event", "us9")
    log.close()

    log2 = AppendLog(path)
    rebuilt = LabelRegistry(log2)
    for record in log2.replay():
        rebuilt.apply(record)
    assert len(rebuilt) == 7
    again = rebuilt.get(created.label_id)
    assert again.name == "Chatter Marks"
    assert again.created_by == "us9"
    # seeding after reload is a no-op
    assert rebuilt.seed_defaults() == 0
    with pytest.raises(DuplicateLabel):
        rebuilt.create_label("chatter marks", "rail_event", "us1")
    log2.close()

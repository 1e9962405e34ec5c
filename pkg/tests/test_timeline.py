import pytest

from storyloom.errors import UnknownNode
from storyloom.timeline import DriftRecord, InsightTimeline, TimelineNode
from storyloom.tree import NarrativeTree


@pytest.fixture
def timeline(fallback_aligner):
    return InsightTimeline(aligner=fallback_aligner,
                           catalog=fallback_aligner.catalog)


@pytest.fixture
def tree():
    return NarrativeTree()


def classify(timeline, tree, text, previous=None, branch_id="main"):
    sentence = tree.append(text)
    return timeline.classify(sentence, previous, branch_id=branch_id,
                             use_llm=False), sentence


def test_first_node_has_null_drift(timeline, tree):
    node, _ = classify(timeline, tree, "Let us plan a trip.")
    assert node.changed_from_previous is None
    assert node.parent_node_id is None
    assert node.node_id == 1


def test_adjust_on_new_geo(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    node, _ = classify(timeline, tree, "Cairo had low cost.", previous=s1)
    drift = node.changed_from_previous
    assert "adjust" in drift.drift_types
    assert drift.dimensions["geo"] == "Porto - Cairo"
    assert drift.severity == "minor"


def test_old_side_none_when_previous_lacks_aspect(timeline, tree):
    _, s1 = classify(timeline, tree, "Let us plan a trip.")
    node, _ = classify(timeline, tree, "Porto is affordable.", previous=s1)
    assert node.changed_from_previous.dimensions["geo"] == "none - Porto"


def test_detect_pattern_keywords(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    node, _ = classify(timeline, tree,
                       "Porto had the lowest cost of all.", previous=s1)
    assert "detect_pattern" in node.changed_from_previous.drift_types


def test_match_mental_model_on_expectation_words(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    node, _ = classify(timeline, tree,
                       "As expected, Porto cost stayed low.", previous=s1)
    assert "match_mental_model" in node.changed_from_previous.drift_types


def test_default_drift_type(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    node, _ = classify(timeline, tree, "Porto cost was fine.", previous=s1)
    assert node.changed_from_previous.drift_types == ("match_mental_model",)
    assert node.changed_from_previous.severity == "none"


def test_provide_overview_multi_topic_no_numerals(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    node, _ = classify(timeline, tree,
                       "Asia balances crowding and safety tradeoffs.",
                       previous=s1)
    assert "provide_overview" in node.changed_from_previous.drift_types


def test_severity_scales_with_changed_aspects(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    node, _ = classify(timeline, tree,
                       "Cairo safety fell in 2024.", previous=s1)
    drift = node.changed_from_previous
    assert set(drift.dimensions) == {"topic", "geo", "time"}
    assert drift.severity == "critical"


def test_fork_marks_next_node_overview(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    timeline.record_fork(1, "b1")
    node, _ = classify(timeline, tree, "Cairo had low cost.",
                       previous=s1, branch_id="b1")
    assert node.parent_node_id == 1
    assert node.branch_id == "b1"
    assert "provide_overview" in node.changed_from_previous.drift_types


def test_fork_unknown_node_rejected(timeline):
    with pytest.raises(UnknownNode):
        timeline.record_fork(7, "b1")


def test_chain_follows_parents(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    _, s2 = classify(timeline, tree, "Cairo had low cost.", previous=s1)
    classify(timeline, tree, "Asia was crowded.", previous=s2)
    assert [n.node_id for n in timeline.chain(3)] == [1, 2, 3]


def test_restore_returns_pre_update_snapshot(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    # update: same sentence id, new content, new node
    tree.update(s1.sentence_id, "Porto had the lowest cost.")
    updated = tree.sentence(s1.sentence_id)
    timeline.classify(updated, s1, use_llm=False)

    before = timeline.restore(1)
    after = timeline.restore(2)
    assert before["sentences"][0]["content"] == "Porto had low cost."
    assert after["sentences"][0]["content"] == "Porto had the lowest cost."
    assert len(after["sentences"]) == 1  # one sentence, latest snapshot wins


def test_nodes_are_append_only(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    tree.update(s1.sentence_id, "Porto had the lowest cost.")
    timeline.classify(tree.sentence(s1.sentence_id), s1, use_llm=False)
    assert len(timeline) == 2
    assert timeline.node(1).sentence_content == "Porto had low cost."


def test_leaf_count_matches_branch_count(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    _, s2 = classify(timeline, tree, "Cairo had low cost.", previous=s1)
    timeline.record_fork(1, "b1")
    classify(timeline, tree, "Asia was crowded.", previous=s1, branch_id="b1")
    leaves = timeline.leaf_nodes()
    assert {n.node_id for n in leaves} == {2, 3}


def test_related_sentence_same_topic(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    _, s2 = classify(timeline, tree, "Safety matters too.", previous=s1)
    node, _ = classify(timeline, tree, "Cairo cost was high.", previous=s2)
    assert node.related_sentence == {"node_id": 1, "reason": "same topic"}


def test_related_source_maps_columns(timeline, tree):
    node, _ = classify(timeline, tree, "Porto had low cost.")
    assert node.related_source["related_columns"] == ["cost"]


def test_reflections_fallback_empty(timeline, tree):
    classify(timeline, tree, "Porto had low cost.")
    assert timeline.suggest_reflections(1, use_llm=False) == []
    assert timeline.suggest_reflections(1) == []  # no gateway configured


def test_reflections_filter_unknown_refs(fallback_aligner, stub_gateway, tree):
    timeline = InsightTimeline(aligner=fallback_aligner, gateway=stub_gateway,
                               catalog=fallback_aligner.catalog)
    classify(timeline, tree, "Porto had low cost.")
    stub_gateway.queue_stub_response("reflections", {
        "node_id": 1, "sentence_id": "s1",
        "sentence_content": "Porto had low cost.",
        "reflect": [
            {"prompt": "Compare with 2023?", "reason": "temporal gap",
             "related_sentence": None},
            {"prompt": "Check Cairo?", "reason": "bad ref",
             "related_sentence": {"node_id": 99, "sentence_content": "x"}},
        ]})
    out = timeline.suggest_reflections(1)
    assert [r["prompt"] for r in out] == ["Compare with 2023?"]


def test_reflections_gateway_error_falls_back(fallback_aligner, stub_gateway, tree):
    timeline = InsightTimeline(aligner=fallback_aligner, gateway=stub_gateway)
    classify(timeline, tree, "Porto had low cost.")
    assert timeline.suggest_reflections(1) == []  # nothing queued


def test_export_field_names(timeline, tree):
    classify(timeline, tree, "Porto had low cost.")
    (entry,) = timeline.export()
    assert set(entry) == {"node_id", "sentence_id", "sentence_content",
                          "changed_from_previous", "related_source",
                          "related_sentence", "parent_node_id", "branch_id",
                          "view_ids"}


def test_json_round_trip(timeline, tree):
    _, s1 = classify(timeline, tree, "Porto had low cost.")
    classify(timeline, tree, "Cairo had the highest cost.", previous=s1)
    clone = InsightTimeline.from_json(timeline.to_json())
    assert clone.export() == timeline.export()
    assert clone._branch_heads == timeline._branch_heads


def test_unknown_node_lookup(timeline):
    with pytest.raises(UnknownNode):
        timeline.node(1)


def test_drift_record_enum_closure():
    with pytest.raises(ValueError):
        DriftRecord.from_json({"drift_types": ["adjust"], "severity": "huge",
                               "dimensions": {}})
    ok = DriftRecord.from_json({"drift_types": ["adjust", "detect_pattern"],
                                "severity": "moderate",
                                "dimensions": {"topic": "cost - safety"}})
    assert ok.to_json()["drift_types"] == ["adjust", "detect_pattern"]

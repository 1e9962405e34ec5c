import pytest

from storyloom.errors import NoGroundedContent, StoryValidationFailed
from storyloom.story import (ALLOWED_OPENERS, MAX_POINTS, MIN_POINTS,
                             DataStory, StoryCompiler, StoryPoint,
                             exploration_path, grounded_sentences,
                             stub_story_responder, validate)
from storyloom.timeline import InsightTimeline
from storyloom.tree import NarrativeTree

PATH = [{"sentence_id": f"s{i}", "sentence_content": f"sentence {i}.",
         "drift_type": None} for i in range(1, 21)]


def story(*texts, refs=None):
    refs = refs or ["s1"] * len(texts)
    return DataStory([StoryPoint(t, r) for t, r in zip(texts, refs)])


def filler(n, opener="Across the data, "):
    out = [opener + "the trip planning starts here."]
    out += [f"Point number {i} adds one more grounded observation." for i in range(n - 1)]
    return out


def codes(st):
    return sorted({v.code for v in validate(st, PATH)})


# 20 crafted stories: expected validator outcome for each
CASES = [
    # 1-4: valid stories at and inside the length bounds
    (story(*filler(8)), []),
    (story(*filler(15)), []),
    (story(*filler(11)), []),
    (story(*filler(9, opener="From Porto onward, ")), []),
    # 5-8: each allowed opener accepted
    (story(*filler(8, opener="Behind every number, ")), []),
    (story(*filler(8, opener="Focusing on cost, ")), []),
    (story(*filler(8, opener="In 2024, ")), []),
    (story(*filler(8, opener="Across regions, ")), []),
    # 9-11: length violations
    (story(*filler(7)), ["LengthViolation"]),
    (story(*filler(16)), ["LengthViolation"]),
    (DataStory([]), ["LengthViolation"]),
    # 12-13: opener violations
    (story(*filler(8, opener="Meanwhile, ")), ["OpenerViolation"]),
    (story(*filler(8, opener="across the data, ")), ["OpenerViolation"]),
    # 14-16: self-reference violations
    (story(*(filler(7) + ["Here i saw the pattern clearly emerge."])),
     ["SelfReferenceViolation"]),
    (story(*(filler(7) + ["Then we looked at safety numbers again."])),
     ["SelfReferenceViolation"]),
    (story(*(filler(7) + ["The model suggested Cairo is an outlier."])),
     ["SelfReferenceViolation"]),
    # 17: empty sentence
    (story(*(filler(7) + ["   "])), ["EmptySentenceViolation"]),
    # 18-19: reference violations, scalar and list refs
    (story(*filler(8), refs=["s1"] * 7 + ["s99"]), ["UnknownRefViolation"]),
    (story(*filler(8), refs=[["s1", "s2"]] * 7 + [["s3", "nope"]]),
     ["UnknownRefViolation"]),
    # 20: compound failure reports every class at once
    (story(*(filler(5, opener="Meanwhile, ") + ["the model did it."]),
           refs=["s1"] * 5 + ["s99"]),
     ["LengthViolation", "OpenerViolation", "SelfReferenceViolation",
      "UnknownRefViolation"]),
]


@pytest.mark.parametrize("crafted,expected", CASES)
def test_crafted_validator_cases(crafted, expected):
    assert codes(crafted) == expected


def test_crafted_case_count():
    assert len(CASES) == 20


def test_opener_check_only_applies_to_first_point():
    ok = story(*filler(8))
    ok.points[3].data_story_sentence = "Meanwhile, nothing here starts with an opener."
    assert validate(ok, PATH) == []


def grounded_fixture(fallback_aligner):
    tree = NarrativeTree()
    timeline = InsightTimeline(aligner=fallback_aligner,
                               catalog=fallback_aligner.catalog)
    previous = None
    texts = ["Porto cost was the lowest at 64.",
             "Cairo safety fell in 2024.",
             "Asia crowding rose over the years.",
             "Ratings stayed stable overall."]
    for text in texts:
        sentence = tree.append(text)
        sentence.view_ids.add(f"v_{sentence.sentence_id}")
        timeline.classify(sentence, previous, use_llm=False)
        previous = sentence
    return tree, timeline


def test_grounded_sentences_rules(fallback_aligner):
    tree, timeline = grounded_fixture(fallback_aligner)
    loose = tree.append("A stray thought with no data.")
    timeline.classify(loose, None, use_llm=False)
    grounded = grounded_sentences(tree, timeline)
    assert loose.sentence_id not in grounded
    assert len(grounded) == 4


def test_exploration_path_serializes_drift(fallback_aligner):
    tree, timeline = grounded_fixture(fallback_aligner)
    entries = exploration_path(tree, timeline)
    assert [e["sentence_id"] for e in entries] == \
        [s.sentence_id for s in tree.active_path()]
    assert entries[0]["drift_type"] is None
    assert entries[1]["drift_type"] is not None


def test_stub_compile_always_validates(fallback_aligner, stub_gateway):
    tree, timeline = grounded_fixture(fallback_aligner)
    stub_gateway.responders["story"] = stub_story_responder
    compiled = StoryCompiler(stub_gateway).compile(tree, timeline)
    entries = exploration_path(tree, timeline)
    assert validate(compiled, entries) == []
    assert MIN_POINTS <= len(compiled.points) <= MAX_POINTS
    assert compiled.points[0].data_story_sentence.startswith(ALLOWED_OPENERS)


def test_compile_restricts_refs_to_grounded(fallback_aligner, stub_gateway):
    tree, timeline = grounded_fixture(fallback_aligner)
    loose = tree.append("A stray thought with no data.")
    timeline.classify(loose, None, use_llm=False)
    stub_gateway.responders["story"] = stub_story_responder
    compiled = StoryCompiler(stub_gateway).compile(tree, timeline)
    grounded = grounded_sentences(tree, timeline)
    for point in compiled.points:
        assert set(point.refs()) <= grounded


def test_compile_requires_grounding(stub_gateway):
    tree = NarrativeTree()
    tree.append("No views anywhere.")
    with pytest.raises(NoGroundedContent):
        StoryCompiler(stub_gateway).compile(tree, InsightTimeline())


def test_bad_story_gets_one_retry_then_hard_failure(fallback_aligner, stub_gateway):
    tree, timeline = grounded_fixture(fallback_aligner)
    # schema-valid but opener-invalid: only the validator can reject it
    bad = [{"data_story_sentence": f"Meanwhile, point {i} carries on.",
            "ref_id": "s1"} for i in range(8)]
    stub_gateway.queue_stub_response("story", bad)
    stub_gateway.queue_stub_response("story", bad)
    with pytest.raises(StoryValidationFailed) as err:
        StoryCompiler(stub_gateway).compile(tree, timeline)
    assert any(v.code == "OpenerViolation" for v in err.value.violations)


def test_retry_can_recover(fallback_aligner, stub_gateway):
    tree, timeline = grounded_fixture(fallback_aligner)
    entries = exploration_path(tree, timeline)
    stub_gateway.queue_stub_response(
        "story", [{"data_story_sentence": "Too short.", "ref_id": "s1"}])
    stub_gateway.queue_stub_response(
        "story", stub_story_responder({"exploration_path": entries}))
    compiled = StoryCompiler(stub_gateway).compile(tree, timeline)
    assert validate(compiled, entries) == []


def test_gateway_failure_is_hard(fallback_aligner, stub_gateway):
    tree, timeline = grounded_fixture(fallback_aligner)
    with pytest.raises(StoryValidationFailed) as err:  # nothing queued
        StoryCompiler(stub_gateway).compile(tree, timeline)
    assert err.value.violations[0].code == "GatewayViolation"


def test_markdown_includes_view_refs():
    st = story(*filler(8))
    md = st.to_markdown(view_ids_of=lambda ref: {"v_1"})
    assert md.count("[v_1]") == 8
    assert md.startswith("- Across")


def test_json_round_trip():
    st = story(*filler(8), refs=[["s1", "s2"]] + ["s1"] * 7)
    assert DataStory.from_json(st.to_json()).to_json() == st.to_json()

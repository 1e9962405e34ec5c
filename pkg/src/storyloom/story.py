"""Story integration: compile the exploration graph into a validated data story.

Compilation runs on the reasoning tier; validation is pure and total, and a
story that fails validation after one re-ask is a hard error carrying the
violation list. There is no silent fallback here by design.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (GatewayError, NoGroundedContent, StoryValidationFailed)
from .prompts import STORY_SCHEMA, render_prompt

ALLOWED_OPENERS = ("Across ", "From ", "Behind every ", "Focusing on ", "In ")
MIN_POINTS, MAX_POINTS = 8, 15
SELF_REFERENCE_TOKENS = (" i ", " we ", "the model")


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass
class StoryPoint:
    data_story_sentence: str
    ref_id: object  # one sentence_id or a list of sentence_ids

    def refs(self) -> list:
        if isinstance(self.ref_id, list):
            return list(self.ref_id)
        return [self.ref_id]

    def to_json(self) -> dict:
        return {"data_story_sentence": self.data_story_sentence, "ref_id": self.ref_id}


@dataclass
class DataStory:
    points: list

    def to_json(self) -> list:
        return [p.to_json() for p in self.points]

    def to_markdown(self, view_ids_of=None) -> str:
        lines = []
        for point in self.points:
            line = point.data_story_sentence
            if view_ids_of is not None:
                views = sorted({v for r in point.refs() for v in view_ids_of(r)})
                if views:
                    line += " [" + ", ".join(views) + "]"
            lines.append("- " + line)
        return "\n".join(lines)

    @classmethod
    def from_json(cls, data: list) -> "DataStory":
        return cls([StoryPoint(p["data_story_sentence"], p["ref_id"]) for p in data])


def grounded_sentences(tree, timeline, links=None) -> set:
    """Sentence ids backed by data: a linked view, or non-empty related columns."""
    grounded = set()
    for path in tree.all_paths():
        for sentence in path:
            if sentence.view_ids:
                grounded.add(sentence.sentence_id)
            elif links is not None and links.views_of(sentence.sentence_id):
                grounded.add(sentence.sentence_id)
    for node in timeline.nodes.values():
        if node.related_source.get("related_columns"):
            grounded.add(node.sentence_id)
    return grounded


def exploration_path(tree, timeline) -> list:
    """Depth-first serialization over all branches for the compile prompt."""
    latest_node = {}
    for node in timeline.nodes.values():
        latest_node[node.sentence_id] = node  # insertion order: last wins
    entries = []
    seen = set()
    for path in tree.all_paths():
        for sentence in path:
            if sentence.sentence_id in seen:
                continue
            seen.add(sentence.sentence_id)
            node = latest_node.get(sentence.sentence_id)
            drift = None
            if node is not None and node.changed_from_previous is not None:
                drift = node.changed_from_previous.drift_types[0]
            entries.append({
                "sentence_id": sentence.sentence_id,
                "sentence_content": sentence.content,
                "drift_type": drift,
            })
    return entries


def validate(story: DataStory, path_entries) -> list:
    """Pure check; violations are data, never exceptions."""
    violations = []
    points = story.points if isinstance(story.points, list) else []
    if not MIN_POINTS <= len(points) <= MAX_POINTS:
        violations.append(Violation(
            "LengthViolation",
            f"story has {len(points)} points, expected {MIN_POINTS}-{MAX_POINTS}"))
    known_ids = {e["sentence_id"] for e in path_entries}
    for index, point in enumerate(points):
        text = point.data_story_sentence
        if not isinstance(text, str) or not text.strip():
            violations.append(Violation(
                "EmptySentenceViolation", f"point {index} is empty"))
            continue
        if index == 0 and not text.startswith(ALLOWED_OPENERS):
            violations.append(Violation(
                "OpenerViolation",
                "first sentence must begin with one of %s" % (ALLOWED_OPENERS,)))
        padded = " " + text.lower() + " "
        for token in SELF_REFERENCE_TOKENS:
            if token in padded:
                violations.append(Violation(
                    "SelfReferenceViolation",
                    f"point {index} contains {token.strip()!r}"))
        for ref in point.refs():
            if ref not in known_ids:
                violations.append(Violation(
                    "UnknownRefViolation", f"point {index} references {ref!r}"))
    return violations


class StoryCompiler:
    def __init__(self, gateway):
        self.gateway = gateway

    def compile(self, tree, timeline, ibis=None, links=None) -> DataStory:
        grounded = grounded_sentences(tree, timeline, links)
        if not grounded:
            raise NoGroundedContent("no sentence is backed by a view or data columns")
        entries = [e for e in exploration_path(tree, timeline)
                   if e["sentence_id"] in grounded]

        story = self._ask(entries)
        violations = validate(story, entries)
        if violations:
            story = self._ask(entries, previous_violations=violations)
            violations = validate(story, entries)
            if violations:
                raise StoryValidationFailed(violations)
        return story

    def _ask(self, entries, previous_violations=None) -> DataStory:
        prompt = render_prompt("story",
                               exploration_path=json.dumps(entries, indent=2))
        if previous_violations:
            prompt += ("\n\nYour previous answer was rejected: "
                       + "; ".join(str(v) for v in previous_violations)
                       + ". Produce a corrected JSON array.")
        try:
            parsed = self.gateway.chat("reasoning", prompt, STORY_SCHEMA,
                                       schema_id="story",
                                       context={"exploration_path": entries})
        except GatewayError as exc:
            raise StoryValidationFailed(
                [Violation("GatewayViolation", str(exc))]) from exc
        return DataStory.from_json(parsed)


# --- deterministic stub responder -------------------------------------------

_POINT_TEMPLATES = (
    "The exploration found that {content}",
    "A closer look showed that {content}",
    "The data further revealed that {content}",
)


_FUNCTION_WORDS = {"the", "a", "an", "in", "on", "overall", "across", "from",
                   "this", "it", "let", "could", "does", "is", "was", "what"}


def _as_clause(content: str) -> str:
    clause = content.strip().rstrip(".?!")
    words = clause.split()
    if words and words[0].lower() in _FUNCTION_WORDS:
        clause = words[0].lower() + clause[len(words[0]):]
    return clause + "."


def stub_story_responder(context: dict) -> list:
    """Synthesize a valid story from the exploration path (offline mode)."""
    entries = list((context or {}).get("exploration_path", ()))
    if not entries:
        return []
    all_ids = [e["sentence_id"] for e in entries]
    points = [{
        "data_story_sentence": (
            "Across the explored dataset, %d grounded observations shape this story."
            % len(entries)),
        "ref_id": all_ids,
    }]
    body_budget = MAX_POINTS - 2
    chosen = entries[:body_budget]
    for i, entry in enumerate(chosen):
        template = _POINT_TEMPLATES[i % len(_POINT_TEMPLATES)]
        points.append({
            "data_story_sentence": template.format(content=_as_clause(entry["sentence_content"])),
            "ref_id": entry["sentence_id"],
        })
    while len(points) < MIN_POINTS - 1:
        entry = entries[len(points) % len(entries)]
        points.append({
            "data_story_sentence": (
                "Returning to the evidence, %s" % _as_clause(entry["sentence_content"])),
            "ref_id": entry["sentence_id"],
        })
    points.append({
        "data_story_sentence": ("Taken together, these findings give the exploration "
                                "a clear, data-backed conclusion."),
        "ref_id": all_ids,
    })
    return points

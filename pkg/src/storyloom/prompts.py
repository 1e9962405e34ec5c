"""Prompt fixtures, their output JSON schemas, and the tier routing table.

Fixture files under ``data/prompts/`` are the single source of truth for the
orchestration prompts; tests pin their hashes so they cannot drift silently.
Substitution slots use ``${name}`` placeholders.
"""

from __future__ import annotations

import hashlib
from importlib import resources

PROMPT_NAMES = (
    "story",
    "reflections",
    "capture",
    "timeline",
    "inquiry_labels",
    "inquiry_issues",
)

# which model tier each orchestrated operation runs on
TIER_FOR = {
    "story": "reasoning",
    "view_caption": "reasoning",
    "capture": "lightweight",
    "tags": "lightweight",
    "timeline": "lightweight",
    "inquiry_issues": "lightweight",
    "inquiry_labels": "lightweight",
    "reflections": "lightweight",
}

DRIFT_TYPES = ("provide_overview", "adjust", "detect_pattern", "match_mental_model")
SEVERITIES = ("none", "minor", "moderate", "critical")
ISSUE_STATUSES = ("open", "resolved", "stalled")
LINK_TYPES = ("suggested_by", "generalized_from", "specialized_from", "replaces")
CONFIDENCES = ("low", "medium", "high")
ARGUMENT_BASES = ("data", "mechanism", "pattern", "comparison", "other")


def prompt_text(name: str) -> str:
    ref = resources.files("storyloom.data.prompts").joinpath(f"{name}.txt")
    return ref.read_text(encoding="utf-8")


def prompt_sha256(name: str) -> str:
    return hashlib.sha256(prompt_text(name).encode("utf-8")).hexdigest()


def render_prompt(name: str, **substitutions) -> str:
    text = prompt_text(name)
    for key, value in substitutions.items():
        text = text.replace("${%s}" % key, str(value))
    return text


STORY_SCHEMA = {
    "type": "array",
    "minItems": 8,
    "maxItems": 15,
    "items": {
        "type": "object",
        "required": ["data_story_sentence", "ref_id"],
        "additionalProperties": False,
        "properties": {
            "data_story_sentence": {"type": "string", "minLength": 1},
            "ref_id": {
                "oneOf": [
                    {"type": "string"},
                    {"type": "array", "items": {"type": "string"}, "minItems": 1},
                ]
            },
        },
    },
}

CAPTURE_SCHEMA = {
    "type": "object",
    "required": ["narrative_suggestion", "source_elementId", "source_view_title", "explanation"],
    "properties": {
        "narrative_suggestion": {"type": ["string", "null"]},
        "source_elementId": {"type": "string"},
        "source_view_title": {"type": "string"},
        "explanation": {"type": "string"},
    },
}

_DRIFT_RECORD_SCHEMA = {
    "type": ["object", "null"],
    "required": ["drift_types", "severity"],
    "properties": {
        "drift_types": {
            "type": "array",
            "minItems": 1,
            "items": {"enum": list(DRIFT_TYPES)},
        },
        "severity": {"enum": list(SEVERITIES)},
        "dimensions": {"type": "object", "additionalProperties": {"type": "string"}},
    },
}

TIMELINE_SCHEMA = {
    "type": "array",
    "minItems": 1,
    "maxItems": 1,
    "items": {
        "type": "object",
        "required": ["node_id", "sentence_id", "sentence_content",
                     "changed_from_previous", "related_source", "related_sentence"],
        "properties": {
            "node_id": {"type": "number"},
            "sentence_id": {"type": "string"},
            "sentence_content": {"type": "string"},
            "changed_from_previous": _DRIFT_RECORD_SCHEMA,
            "related_source": {
                "type": "object",
                "required": ["related_categories", "related_columns"],
                "properties": {
                    "related_categories": {"type": "array", "items": {"type": "string"}},
                    "related_columns": {"type": "array", "items": {"type": "string"}},
                },
            },
            "related_sentence": {
                "type": ["object", "null"],
                "required": ["node_id", "reason"],
                "properties": {
                    "node_id": {"type": "number"},
                    "reason": {"type": "string"},
                },
            },
        },
    },
}

REFLECTIONS_SCHEMA = {
    "type": "object",
    "required": ["node_id", "sentence_id", "sentence_content", "reflect"],
    "properties": {
        "node_id": {"type": "number"},
        "sentence_id": {"type": "string"},
        "sentence_content": {"type": "string"},
        "reflect": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["prompt", "reason", "related_sentence"],
                "properties": {
                    "prompt": {"type": "string", "minLength": 1},
                    "reason": {"type": "string"},
                    "related_sentence": {
                        "type": ["object", "null"],
                        "required": ["node_id", "sentence_content"],
                        "properties": {
                            "node_id": {"type": "number"},
                            "sentence_content": {"type": "string"},
                        },
                    },
                },
            },
        },
    },
}

INQUIRY_ISSUES_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["qid", "title", "status", "sentenceRefs"],
        "properties": {
            "qid": {"type": "string", "pattern": "^iss_"},
            "title": {"type": "string", "minLength": 1},
            "status": {"enum": list(ISSUE_STATUSES)},
            "sentenceRefs": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        },
    },
}

INQUIRY_LABELS_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["qid", "position_suggested_by", "argument_suggested_by", "links"],
        "properties": {
            "qid": {"type": "string"},
            "position_suggested_by": {
                "type": ["object", "null"],
                "required": ["text", "confidence"],
                "properties": {
                    "text": {"type": "string"},
                    "confidence": {"enum": list(CONFIDENCES)},
                },
            },
            "argument_suggested_by": {
                "type": ["object", "null"],
                "required": ["text", "basis"],
                "properties": {
                    "text": {"type": "string"},
                    "basis": {"enum": list(ARGUMENT_BASES)},
                },
            },
            "links": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["qid", "type", "explanation"],
                    "properties": {
                        "qid": {"type": "string"},
                        "type": {"enum": list(LINK_TYPES)},
                        "explanation": {"type": "string"},
                    },
                },
            },
        },
    },
}

SCHEMA_FOR = {
    "story": STORY_SCHEMA,
    "capture": CAPTURE_SCHEMA,
    "timeline": TIMELINE_SCHEMA,
    "reflections": REFLECTIONS_SCHEMA,
    "inquiry_issues": INQUIRY_ISSUES_SCHEMA,
    "inquiry_labels": INQUIRY_LABELS_SCHEMA,
}

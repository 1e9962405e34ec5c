"""Shared tag vocabulary: normalization of free text into geo/topic/time/intent tags.

The rule-based pass matches schema vocabulary values case-insensitively and
maps analysis keywords to proposition-family intents. An optional gateway
refinement may only ever add values already present in the vocabulary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .query import FAMILIES

INTENT_VOCABULARY = FAMILIES + ("overview",)

# keyword -> intent; substring match, lowercased
INTENT_KEYWORDS = {
    "highest": "ranking",
    "lowest": "ranking",
    "top": "ranking",
    "stands out": "ranking",
    "rose": "temporal_change",
    "fell": "temporal_change",
    "grew": "temporal_change",
    "trend": "temporal_change",
    "over time": "temporal_change",
    "share": "composition",
    "proportion": "composition",
    "accounts for": "composition",
    "outlier": "outlier",
    "unexpected": "outlier",
    "anomal": "outlier",
    "per-capita": "per_capita",
    "per capita": "per_capita",
    "per": "per_capita",
    "ratio": "per_capita",
    "correlat": "correlation",
    "relationship": "correlation",
    "versus": "correlation",
    "overall": "overview",
    "landscape": "overview",
    "big picture": "overview",
    "overview": "overview",
}

# lexical variants -> canonical topic stems; applied before vocabulary lookup
TOPIC_SYNONYMS = {
    "affordab": "cost",
    "cheap": "cost",
    "expensive": "cost",
    "pricey": "cost",
    "busy": "crowding",
    "danger": "safety",
}

_WORD_RE = re.compile(r"[a-z0-9_]+")


@dataclass(frozen=True)
class TagSet:
    geo: frozenset = frozenset()
    topic: frozenset = frozenset()
    time: frozenset = frozenset()
    intent: frozenset = frozenset()

    def flattened(self) -> frozenset:
        out = set()
        for key in ("geo", "topic", "time", "intent"):
            out |= {f"{key}:{v}" for v in getattr(self, key)}
        return frozenset(out)

    def jaccard(self, other: "TagSet") -> float:
        a, b = self.flattened(), other.flattened()
        if not a and not b:
            return 0.0
        return len(a & b) / len(a | b)

    def is_empty(self) -> bool:
        return not (self.geo or self.topic or self.time or self.intent)

    def to_json(self) -> dict:
        return {
            "geo": sorted(self.geo),
            "topic": sorted(self.topic),
            "time": sorted(self.time),
            "intent": sorted(self.intent),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TagSet":
        return cls(
            geo=frozenset(data.get("geo", ())),
            topic=frozenset(data.get("topic", ())),
            time=frozenset(data.get("time", ())),
            intent=frozenset(data.get("intent", ())),
        )

    @classmethod
    def build(cls, geo=(), topic=(), time=(), intent=()) -> "TagSet":
        return cls(
            geo=frozenset(str(v) for v in geo),
            topic=frozenset(str(v) for v in topic),
            time=frozenset(str(v) for v in time),
            intent=frozenset(intent),
        )


def _mentions(text_lower: str, words: set, term: str) -> bool:
    """Does the text mention the vocabulary term (word match or prefix stem)?"""
    term_l = term.lower()
    if re.search(r"(?<![a-z0-9])" + re.escape(term_l) + r"(?![a-z0-9])", text_lower):
        return True
    # shared 4-char prefix stemming: crowding ~ crowded, safety ~ safe
    if len(term_l) >= 4:
        prefix = term_l[:4]
        return any(len(w) >= 4 and w[:4] == prefix for w in words)
    return False


def normalize_tags(text: str, vocabulary: dict, synonyms: dict | None = None) -> TagSet:
    """Rule-based tag extraction against a catalog tag vocabulary."""
    synonyms = TOPIC_SYNONYMS if synonyms is None else synonyms
    text_lower = text.lower()
    words = set(_WORD_RE.findall(text_lower))

    expanded = text_lower
    for variant, canonical in synonyms.items():
        if variant in text_lower:
            expanded += " " + canonical
    expanded_words = set(_WORD_RE.findall(expanded))

    geo = {v for v in vocabulary.get("geo", ()) if _mentions(text_lower, words, str(v))}
    topic = {v for v in vocabulary.get("topic", ()) if _mentions(expanded, expanded_words, str(v))}
    time = {v for v in vocabulary.get("time", ()) if _mentions(text_lower, words, str(v))}

    intent = set()
    for keyword, family in INTENT_KEYWORDS.items():
        if " " in keyword or "-" in keyword:
            hit = keyword in text_lower
        elif keyword.endswith(("correlat", "anomal")) or keyword == "anomal":
            hit = keyword in text_lower  # stem keywords match inflections
        else:
            hit = re.search(r"\b" + re.escape(keyword) + r"\b", text_lower) is not None
        if hit:
            intent.add(family)

    return TagSet.build(geo=geo, topic=topic, time=time, intent=intent)

"""Insight timeline: drift classification over narrative changes.

Every content change produces an immutable TimelineNode; updates create new
nodes rather than rewriting old ones, so the timeline is a provenance record
the narrative itself cannot erase. Nodes parent along branches, mirroring the
narrative tree.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import GatewayError, UnknownNode
from .prompts import (DRIFT_TYPES, REFLECTIONS_SCHEMA, SEVERITIES,
                      TIMELINE_SCHEMA, render_prompt)
from .tags import TagSet

_NUMERAL_RE = re.compile(r"\d")

PATTERN_KEYWORDS = ("highest", "lowest", "most", "least", "best", "worst",
                    "outlier", "percent", "%", "correlat", "rose", "fell",
                    "peak", "spike")
EXPECTATION_KEYWORDS = ("as expected", "confirms", "surprising", "contrary")

_SEVERITY_BY_CHANGES = {0: "none", 1: "minor", 2: "moderate"}  # >=3 critical


@dataclass(frozen=True)
class DriftRecord:
    drift_types: tuple
    severity: str
    dimensions: dict

    def to_json(self) -> dict:
        return {
            "drift_types": list(self.drift_types),
            "severity": self.severity,
            "dimensions": dict(self.dimensions),
        }

    @classmethod
    def from_json(cls, data: dict) -> "DriftRecord":
        types = tuple(data["drift_types"])
        if not types or any(t not in DRIFT_TYPES for t in types):
            raise ValueError("invalid drift_types: %r" % (types,))
        if data["severity"] not in SEVERITIES:
            raise ValueError("invalid severity: %r" % data["severity"])
        return cls(types, data["severity"], dict(data.get("dimensions", {})))


@dataclass
class TimelineNode:
    node_id: int
    sentence_id: str
    sentence_content: str  # snapshot at classification time
    changed_from_previous: DriftRecord | None
    related_source: dict
    related_sentence: dict | None
    parent_node_id: int | None
    branch_id: str
    tags: TagSet = field(default_factory=TagSet)
    view_ids: tuple = ()

    def to_json(self) -> dict:
        return {
            "node_id": self.node_id,
            "sentence_id": self.sentence_id,
            "sentence_content": self.sentence_content,
            "changed_from_previous": (
                self.changed_from_previous.to_json()
                if self.changed_from_previous else None),
            "related_source": self.related_source,
            "related_sentence": self.related_sentence,
            "parent_node_id": self.parent_node_id,
            "branch_id": self.branch_id,
            "view_ids": list(self.view_ids),
        }


class InsightTimeline:
    def __init__(self, aligner=None, gateway=None, catalog=None):
        self.aligner = aligner
        self.gateway = gateway
        self.catalog = catalog
        self.nodes: dict[int, TimelineNode] = {}
        self._order: list[int] = []
        self._next_id = 1
        # branch -> node_id of the latest node on that branch
        self._branch_heads: dict[str, int | None] = {"main": None}
        self._fresh_forks: set[str] = set()

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> TimelineNode:
        if node_id not in self.nodes:
            raise UnknownNode(str(node_id))
        return self.nodes[node_id]

    def _tags_for(self, text: str) -> TagSet:
        if self.aligner is not None:
            return self.aligner.normalize_tags(text)
        return TagSet()

    def _related_source(self, tags: TagSet) -> dict:
        """Map the sentence's topic tags back onto catalog columns and categories."""
        columns, categories = set(), set()
        if self.catalog is not None:
            for name in self.catalog.table_names():
                schema = self.catalog.schema(name)
                measure_names = {c.name for c in schema.by_role("measure")}
                columns |= tags.topic & measure_names
                categories |= tags.topic & set(schema.category_tags)
        return {
            "related_categories": sorted(categories),
            "related_columns": sorted(columns),
        }

    # --- classification ------------------------------------------------

    def classify(self, current, previous=None, branch_id: str = "main",
                 use_llm: bool = True) -> TimelineNode:
        cur_tags = self._tags_for(current.content)
        related_source = self._related_source(cur_tags)

        after_fork = branch_id in self._fresh_forks
        self._fresh_forks.discard(branch_id)

        if previous is None:
            drift = None
        else:
            drift = None
            if use_llm and self.gateway is not None:
                drift = self._classify_llm(current, previous, related_source)
            if drift is None:
                drift = self._classify_rules(
                    current.content, cur_tags,
                    self._tags_for(previous.content), after_fork)

        parent = self._branch_heads.get(branch_id)
        node = TimelineNode(
            node_id=self._next_id,
            sentence_id=current.sentence_id,
            sentence_content=current.content,
            changed_from_previous=drift,
            related_source=related_source,
            related_sentence=self._related_sentence(cur_tags, parent),
            parent_node_id=parent,
            branch_id=branch_id,
            tags=cur_tags,
            view_ids=tuple(sorted(current.view_ids)),
        )
        self._next_id += 1
        self.nodes[node.node_id] = node
        self._order.append(node.node_id)
        self._branch_heads[branch_id] = node.node_id
        return node

    def _classify_llm(self, current, previous, related_source) -> DriftRecord | None:
        payload = {
            "previous_sentence": previous.content,
            "current_sentence": current.content,
        }
        try:
            prompt = render_prompt(
                "timeline",
                related_categories=json.dumps(related_source["related_categories"]),
                related_columns=json.dumps(related_source["related_columns"]),
                input_json=json.dumps(payload, indent=2))
            parsed = self.gateway.chat("lightweight", prompt, TIMELINE_SCHEMA,
                                       schema_id="timeline", context=payload)
            entry = parsed[0]["changed_from_previous"]
            if entry is None:
                return None
            return DriftRecord.from_json(entry)
        except (GatewayError, ValueError, KeyError, IndexError):
            return None

    def _classify_rules(self, content: str, cur: TagSet, prev: TagSet,
                        after_fork: bool) -> DriftRecord:
        text = content.lower()
        dimensions = {}
        for aspect in ("topic", "geo", "time"):
            cur_vals = getattr(cur, aspect)
            prev_vals = getattr(prev, aspect)
            if cur_vals - prev_vals:
                old = ", ".join(sorted(prev_vals)) or "none"
                new = ", ".join(sorted(cur_vals))
                dimensions[aspect] = f"{old} - {new}"

        types = []
        if after_fork or (len(cur.topic) >= 2 and not _NUMERAL_RE.search(text)):
            types.append("provide_overview")
        if dimensions:
            types.append("adjust")
        if any(k in text for k in PATTERN_KEYWORDS):
            types.append("detect_pattern")
        if any(k in text for k in EXPECTATION_KEYWORDS):
            types.append("match_mental_model")
        if not types:
            # nothing new and no analytic signal: reads as confirmation
            types.append("match_mental_model")

        severity = _SEVERITY_BY_CHANGES.get(len(dimensions), "critical")
        return DriftRecord(tuple(types), severity, dimensions)

    def _related_sentence(self, cur_tags: TagSet, parent_id: int | None) -> dict | None:
        node_id = parent_id
        while node_id is not None:
            node = self.nodes[node_id]
            if cur_tags.topic & node.tags.topic:
                return {"node_id": node.node_id, "reason": "same topic"}
            node_id = node.parent_node_id
        return None

    # --- branching / restore -------------------------------------------

    def record_fork(self, at_node: int, new_branch_id: str) -> None:
        if at_node not in self.nodes:
            raise UnknownNode(str(at_node))
        self._branch_heads[new_branch_id] = at_node
        self._fresh_forks.add(new_branch_id)

    def chain(self, node_id: int) -> list[TimelineNode]:
        node = self.node(node_id)
        out = []
        while node is not None:
            out.append(node)
            node = self.nodes.get(node.parent_node_id) if node.parent_node_id else None
        return list(reversed(out))

    def restore(self, node_id: int) -> dict:
        """State descriptor: sentence chain with content snapshots as of each node."""
        latest_by_sentence = {}
        chain = self.chain(node_id)
        for node in chain:
            latest_by_sentence[node.sentence_id] = node
        seen = set()
        sentences = []
        for node in chain:
            if node.sentence_id in seen:
                continue
            seen.add(node.sentence_id)
            snap = latest_by_sentence[node.sentence_id]
            sentences.append({
                "sentence_id": snap.sentence_id,
                "content": snap.sentence_content,
                "view_ids": list(snap.view_ids),
            })
        return {"node_id": node_id, "sentences": sentences}

    def leaf_nodes(self) -> list[TimelineNode]:
        parents = {n.parent_node_id for n in self.nodes.values()
                   if n.parent_node_id is not None}
        return [self.nodes[i] for i in self._order if i not in parents]

    # --- reflections ----------------------------------------------------

    def suggest_reflections(self, node_id: int, use_llm: bool = True) -> list:
        node = self.node(node_id)
        if not (use_llm and self.gateway is not None):
            return []
        context = []
        ancestor = self.nodes.get(node.parent_node_id) if node.parent_node_id else None
        while ancestor is not None:
            if node.tags.topic & ancestor.tags.topic:
                context.append({"node_id": ancestor.node_id,
                                "sentence_content": ancestor.sentence_content,
                                "reason": "same topic"})
            ancestor = (self.nodes.get(ancestor.parent_node_id)
                        if ancestor.parent_node_id else None)
        try:
            prompt = render_prompt(
                "reflections",
                related_source=json.dumps(node.related_source),
                related_sentences_context=json.dumps(context, indent=2),
                node_id=str(node.node_id),
                sentence_id=node.sentence_id,
                sentence_content=node.sentence_content)
            parsed = self.gateway.chat("lightweight", prompt, REFLECTIONS_SCHEMA,
                                       schema_id="reflections",
                                       context={"node_id": node.node_id})
        except GatewayError:
            return []
        out = []
        for item in parsed.get("reflect", []):
            related = item.get("related_sentence")
            if related is not None and related.get("node_id") not in self.nodes:
                continue  # referential integrity over model output
            out.append({"prompt": item["prompt"], "reason": item["reason"],
                        "related_sentence": related})
        return out

    # --- export / persistence -------------------------------------------

    def export(self) -> list:
        return [self.nodes[i].to_json() for i in self._order]

    def to_json(self) -> dict:
        return {
            "nodes": self.export(),
            "tags": {i: self.nodes[i].tags.to_json() for i in self._order},
            "next_id": self._next_id,
            "branch_heads": dict(self._branch_heads),
            "fresh_forks": sorted(self._fresh_forks),
        }

    @classmethod
    def from_json(cls, data: dict, aligner=None, gateway=None, catalog=None) -> "InsightTimeline":
        tl = cls(aligner=aligner, gateway=gateway, catalog=catalog)
        tags = data.get("tags", {})
        for raw in data["nodes"]:
            drift = (DriftRecord.from_json(raw["changed_from_previous"])
                     if raw["changed_from_previous"] else None)
            node = TimelineNode(
                node_id=raw["node_id"],
                sentence_id=raw["sentence_id"],
                sentence_content=raw["sentence_content"],
                changed_from_previous=drift,
                related_source=raw["related_source"],
                related_sentence=raw["related_sentence"],
                parent_node_id=raw["parent_node_id"],
                branch_id=raw["branch_id"],
                tags=TagSet.from_json(tags.get(str(raw["node_id"]),
                                               tags.get(raw["node_id"], {}))),
                view_ids=tuple(raw.get("view_ids", ())),
            )
            tl.nodes[node.node_id] = node
            tl._order.append(node.node_id)
        tl._next_id = data["next_id"]
        tl._branch_heads = {k: v for k, v in data["branch_heads"].items()}
        tl._fresh_forks = set(data.get("fresh_forks", ()))
        return tl

"""Joint semantic space over propositions and chart captions.

Both entry kinds are normalized into shared tags and embedded with the same
encoder (bi-encoder symmetry); a user sentence is matched by a weighted blend
of cosine similarity and tag overlap, and the match decides between a single
chart, a dashboard, or no view at all. Also owns the bidirectional
sentence-view link table.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import (
    EmbeddingDimensionMismatch,
    IndexNotBuilt,
    NoMatch,
    ProviderUnavailable,
    SchemaValidationExhausted,
    UnknownId,
)
from .gateway import cosine
from .propositions import PropositionInstance
from .query import QueryPlan
from .tags import TagSet, normalize_tags
from .views import ChartTemplate, ViewSpec, compose_dashboard, fallback_caption, render_view


@dataclass
class AlignmentConfig:
    weight_cosine: float = 0.7
    weight_tags: float = 0.3
    tau: float = 0.55
    dashboard_cap: int = 4
    embed_mode: bool = True  # False = pure tag-Jaccard fallback


@dataclass
class JointEntry:
    entry_id: str
    kind: str  # proposition | chart_caption
    text: str
    tags: TagSet
    embedding: list | None = None
    proposition_instance_id: str | None = None
    chart_template_id: str | None = None

    def embed_text(self) -> str:
        return self.text + " " + " ".join(sorted(self.tags.flattened()))

    def to_json(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "kind": self.kind,
            "text": self.text,
            "tags": self.tags.to_json(),
            "embedding": self.embedding,
            "proposition_instance_id": self.proposition_instance_id,
            "chart_template_id": self.chart_template_id,
        }

    @classmethod
    def from_json(cls, data: dict) -> "JointEntry":
        return cls(
            entry_id=data["entry_id"],
            kind=data["kind"],
            text=data["text"],
            tags=TagSet.from_json(data["tags"]),
            embedding=data.get("embedding"),
            proposition_instance_id=data.get("proposition_instance_id"),
            chart_template_id=data.get("chart_template_id"),
        )


@dataclass
class MatchResult:
    ranked: list  # (entry_id, score), descending
    decision: str  # single_chart | dashboard | no_match
    query_tags: TagSet = field(default_factory=TagSet)


class SemanticAligner:
    def __init__(self, catalog, gateway, config: AlignmentConfig | None = None):
        self.catalog = catalog
        self.gateway = gateway
        self.config = config or AlignmentConfig()
        self.entries: list[JointEntry] = []
        self.by_id: dict[str, JointEntry] = {}
        self.instances: dict[str, PropositionInstance] = {}
        self.chart_templates: dict[str, ChartTemplate] = {}
        self._built = False
        self._matrix = None
        self._vocab: dict | None = None

    # --- vocabulary ------------------------------------------------------

    def vocabulary(self) -> dict:
        if self._vocab is None:
            merged = {"geo": set(), "topic": set(), "time": set(), "intent": set()}
            for name in self.catalog.table_names():
                vocab = self.catalog.derive_tag_vocabulary(self.catalog.schema(name))
                for key in merged:
                    merged[key] |= vocab[key]
            merged["intent"].add("overview")
            self._vocab = merged
        return self._vocab

    def invalidate_vocabulary(self):
        self._vocab = None

    def normalize_tags(self, text: str) -> TagSet:
        return normalize_tags(text, self.vocabulary())

    # --- index -----------------------------------------------------------

    def build_index(self, instances, chart_templates) -> int:
        entries: list[JointEntry] = []
        for inst in instances:
            entries.append(JointEntry(
                entry_id=f"e_{inst.instance_id}",
                kind="proposition",
                text=inst.filled_text,
                tags=inst.tags,
                proposition_instance_id=inst.instance_id,
            ))
            self.instances[inst.instance_id] = inst
        for tpl in chart_templates:
            digest = hashlib.sha1(tpl.template_id.encode()).hexdigest()[:10]
            entries.append(JointEntry(
                entry_id=f"e_c_{digest}",
                kind="chart_caption",
                text=tpl.caption,
                tags=tpl.tags,
                chart_template_id=tpl.template_id,
            ))
            self.chart_templates[tpl.template_id] = tpl
        if not entries:
            raise IndexNotBuilt("no entries to index")

        if self.config.embed_mode:
            vectors = self.gateway.embed([e.embed_text() for e in entries])
            dims = {len(v) for v in vectors}
            if len(dims) != 1:
                raise EmbeddingDimensionMismatch(str(sorted(dims)))
            for e, v in zip(entries, vectors):
                e.embedding = list(v)

        self.entries = entries
        self.by_id = {e.entry_id: e for e in entries}
        self._matrix = None
        if self.config.embed_mode:
            import numpy as np

            self._matrix = np.array([e.embedding for e in entries], dtype=float)
        self._built = True
        return len(entries)

    def index_digest(self) -> str:
        blob = json.dumps([e.to_json() for e in self.entries], sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def dump_jsonl(self) -> str:
        return "\n".join(json.dumps(e.to_json(), sort_keys=True) for e in self.entries)

    def load_jsonl(self, text: str) -> int:
        self.entries = [JointEntry.from_json(json.loads(line))
                        for line in text.splitlines() if line.strip()]
        self.by_id = {e.entry_id: e for e in self.entries}
        self._matrix = None
        if self.config.embed_mode and all(e.embedding is not None for e in self.entries):
            import numpy as np

            self._matrix = np.array([e.embedding for e in self.entries], dtype=float)
        self._built = True
        return len(self.entries)

    # --- matching ----------------------------------------------------------

    def score(self, query_vec, query_tags: TagSet, query_text: str, entry: JointEntry) -> float:
        tag_score = query_tags.jaccard(entry.tags)
        if not self.config.embed_mode or entry.embedding is None:
            return tag_score
        cos = max(0.0, cosine(query_vec, entry.embedding))
        return self.config.weight_cosine * cos + self.config.weight_tags * tag_score

    def match(self, text: str) -> MatchResult:
        if not self._built:
            raise IndexNotBuilt()
        query_tags = self.normalize_tags(text)
        query_vec = None
        if self.config.embed_mode:
            query_text = text + " " + " ".join(sorted(query_tags.flattened()))
            query_vec = self.gateway.embed([query_text])[0]

        cos_all = None
        if self.config.embed_mode and getattr(self, "_matrix", None) is not None:
            import numpy as np

            q = np.array(query_vec, dtype=float)
            qn = np.linalg.norm(q)
            norms = np.linalg.norm(self._matrix, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                cos_all = np.where(
                    (norms > 0) & (qn > 0), self._matrix @ q / (norms * qn), 0.0
                )
            cos_all = np.clip(cos_all, 0.0, None)

        scored = []
        for i, entry in enumerate(self.entries):
            if cos_all is not None:
                s = (self.config.weight_cosine * float(cos_all[i])
                     + self.config.weight_tags * query_tags.jaccard(entry.tags))
            else:
                s = self.score(query_vec, query_tags, text, entry)
            threshold_ok = s >= self.config.tau if self.config.embed_mode else s > 0
            if threshold_ok:
                # ties resolved by exact text match, then stable entry id
                scored.append((-s, 0 if entry.text == text else 1, entry.entry_id, s))
        scored.sort()
        ranked = [(entry_id, s) for _, _, entry_id, s in scored]

        if not ranked:
            return MatchResult(ranked=[], decision="no_match", query_tags=query_tags)
        decision = self._decide(ranked, query_tags)
        return MatchResult(ranked=ranked, decision=decision, query_tags=query_tags)

    def _decide(self, ranked, query_tags: TagSet) -> str:
        if "overview" in query_tags.intent:
            return "dashboard"
        topics = set()
        for entry_id, _ in ranked[:3]:
            topics |= self.by_id[entry_id].tags.topic
        return "dashboard" if len(topics) >= 2 else "single_chart"


# --- rendering glue ---------------------------------------------------------


def _adhoc_template(kind: str, fmt: dict, tags: TagSet, family: str, key: str) -> ChartTemplate:
    return ChartTemplate(
        template_id=f"adhoc|{family}|{key}",
        chart_kind=kind,
        expected_format=fmt,
        caption=fallback_caption(kind, fmt),
        tags=tags,
        compatible_families=(family,),
    )


def render_instance(instance: PropositionInstance, catalog, engine) -> ViewSpec:
    """Execute a proposition's evidence plan and render its canonical view."""
    family = instance.family
    plan = instance.plan
    schema = catalog.schema(plan.table)
    measures = [c.name for c in schema.by_role("measure")]

    if family == "ranking":
        result = engine.execute(plan)
        label = plan.group_by[0]
        metric = plan.aggregate[0][1]
        template = _adhoc_template("bar", {"labels": label, "values": metric},
                                   instance.tags, family, instance.instance_id)
    elif family == "temporal_change":
        time_col = plan.group_by[0]
        metric = plan.aggregate[0][1]
        base = QueryPlan(table=plan.table, filters=plan.filters,
                         group_by=(time_col,), aggregate=(("mean", metric),))
        result = engine.execute(base)
        template = _adhoc_template("line", {"x": time_col, "y": metric},
                                   instance.tags, family, instance.instance_id)
    elif family == "composition":
        result = engine.execute(plan)
        group = plan.group_by[0]
        metric = plan.aggregate[0][1]
        template = _adhoc_template("bar", {"labels": group, "values": metric},
                                   instance.tags, family, instance.instance_id)
    elif family == "outlier":
        label = plan.group_by[0]
        metric = plan.aggregate[0][1]
        second = next((m for m in measures if m != metric), None)
        if second is not None:
            base = QueryPlan(table=plan.table, filters=plan.filters, group_by=(label,),
                             aggregate=(("mean", metric), ("mean", second)))
            result = engine.execute(base)
            template = _adhoc_template("scatter", {"x": metric, "y": second},
                                       instance.tags, family, instance.instance_id)
        else:
            base = QueryPlan(table=plan.table, filters=plan.filters, group_by=(label,),
                             aggregate=(("mean", metric),))
            result = engine.execute(base)
            template = _adhoc_template("bar", {"labels": label, "values": metric},
                                       instance.tags, family, instance.instance_id)
    elif family == "per_capita":
        result = engine.execute(plan)
        label = plan.group_by[0]
        template = _adhoc_template("bar", {"labels": label, "values": "ratio"},
                                   instance.tags, family, instance.instance_id)
    elif family == "correlation":
        entity = plan.group_by[0]
        a, b = plan.derived.column_a, plan.derived.column_b
        base = QueryPlan(table=plan.table, filters=plan.filters, group_by=(entity,),
                         aggregate=(("mean", a), ("mean", b)))
        result = engine.execute(base)
        template = _adhoc_template("scatter", {"x": a, "y": b},
                                   instance.tags, family, instance.instance_id)
    else:
        raise NoMatch(f"unrenderable family {family!r}")

    return render_view(template, result, title=instance.filled_text,
                       source_plan=plan, description=instance.filled_text)


def canonical_plan(template: ChartTemplate, table_name: str) -> QueryPlan:
    """Default evidence plan for an adapted library chart template."""
    fmt = template.expected_format
    kind = template.chart_kind
    if kind in ("bar", "grouped_bar"):
        group = (fmt["labels"],) + ((fmt["group"],) if "group" in fmt else ())
        return QueryPlan(table=table_name, group_by=group,
                         aggregate=(("mean", fmt["values"]),), sort=(fmt["values"], "desc"))
    if kind in ("line", "multi_line"):
        group = (fmt["x"],) + ((fmt["group"],) if "group" in fmt else ())
        return QueryPlan(table=table_name, group_by=group, aggregate=(("mean", fmt["y"]),))
    if kind == "heatmap":
        return QueryPlan(table=table_name, group_by=(fmt["x"], fmt["y"]),
                         aggregate=(("mean", fmt["value"]),))
    # scatter / histogram use raw rows
    return QueryPlan(table=table_name)


def render_chart_template(template: ChartTemplate, catalog, engine) -> ViewSpec:
    table_name = template.template_id.rsplit("@", 1)[-1]
    plan = canonical_plan(template, table_name)
    result = engine.execute(plan)
    return render_view(template, result, title=template.caption, source_plan=plan)


class ViewResolver:
    """Turns a sentence into linked views via the joint index."""

    def __init__(self, aligner: SemanticAligner, engine, links, view_store):
        self.aligner = aligner
        self.engine = engine
        self.links = links
        self.views = view_store

    def _render_entry(self, entry: JointEntry) -> ViewSpec:
        if entry.kind == "proposition":
            inst = self.aligner.instances[entry.proposition_instance_id]
            return render_instance(inst, self.aligner.catalog, self.engine)
        template = self.aligner.chart_templates[entry.chart_template_id]
        return render_chart_template(template, self.aligner.catalog, self.engine)

    def _entry_kind_key(self, entry: JointEntry):
        if entry.kind == "proposition":
            inst = self.aligner.instances[entry.proposition_instance_id]
            from .views import FAMILY_CHARTS

            return FAMILY_CHARTS[inst.family][0]
        return self.aligner.chart_templates[entry.chart_template_id].chart_kind

    def show_view(self, sentence):
        result = self.aligner.match(sentence.content)
        if result.decision == "no_match":
            raise NoMatch(sentence.sentence_id)

        if result.decision == "single_chart":
            entry = self.aligner.by_id[result.ranked[0][0]]
            view = self._render_entry(entry)
            self.views.put(view)
            self.links.link(sentence.sentence_id, view.view_id)
            sentence.view_ids.add(view.view_id)
            return view

        chosen, kinds_used, topics_used = [], set(), set()
        for entry_id, _ in result.ranked:
            if len(chosen) >= self.aligner.config.dashboard_cap:
                break
            entry = self.aligner.by_id[entry_id]
            kind = self._entry_kind_key(entry)
            topics = frozenset(entry.tags.topic)
            if kind in kinds_used and (not topics or topics <= topics_used):
                continue
            chosen.append(entry)
            kinds_used.add(kind)
            topics_used |= topics
        views = []
        seen_ids = set()
        for entry in chosen:
            view = self._render_entry(entry)
            if view.view_id in seen_ids:
                continue
            seen_ids.add(view.view_id)
            self.views.put(view)
            self.links.link(sentence.sentence_id, view.view_id)
            sentence.view_ids.add(view.view_id)
            views.append(view)
        return compose_dashboard(views)


class LinkTable:
    """Bidirectional sentence-view links; symmetric and idempotent."""

    def __init__(self, sentence_exists=None, view_exists=None):
        self._s2v: dict[str, set] = {}
        self._v2s: dict[str, set] = {}
        self._sentence_exists = sentence_exists
        self._view_exists = view_exists

    def _check_sentence(self, sentence_id: str):
        if self._sentence_exists is not None and not self._sentence_exists(sentence_id):
            raise UnknownId(sentence_id)

    def _check_view(self, view_id: str):
        if self._view_exists is not None and not self._view_exists(view_id):
            raise UnknownId(view_id)

    def link(self, sentence_id: str, view_id: str) -> None:
        self._check_sentence(sentence_id)
        self._check_view(view_id)
        self._s2v.setdefault(sentence_id, set()).add(view_id)
        self._v2s.setdefault(view_id, set()).add(sentence_id)

    def views_of(self, sentence_id: str) -> set:
        self._check_sentence(sentence_id)
        return set(self._s2v.get(sentence_id, ()))

    def sentences_of(self, view_id: str) -> set:
        self._check_view(view_id)
        return set(self._v2s.get(view_id, ()))

    def to_json(self) -> dict:
        return {s: sorted(v) for s, v in sorted(self._s2v.items())}

    @classmethod
    def from_json(cls, data: dict, **kwargs) -> "LinkTable":
        table = cls(**kwargs)
        for s, views in data.items():
            for v in views:
                table._s2v.setdefault(s, set()).add(v)
                table._v2s.setdefault(v, set()).add(s)
        return table


class ViewStore:
    def __init__(self):
        self._views: dict[str, ViewSpec] = {}

    def put(self, view: ViewSpec) -> None:
        self._views[view.view_id] = view

    def get(self, view_id: str) -> ViewSpec:
        if view_id not in self._views:
            raise UnknownId(view_id)
        return self._views[view_id]

    def __contains__(self, view_id: str) -> bool:
        return view_id in self._views

    def all(self) -> list[ViewSpec]:
        return [self._views[k] for k in sorted(self._views)]

    def to_json(self) -> list:
        return [v.to_json() for v in self.all()]

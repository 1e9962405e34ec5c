"""Chart template library and Vega-Lite view rendering.

Base templates declare an expected data format as a role map; adapting them
to a schema binds each role to a concrete column. Rendering is pure: the
emitted grammar spec inlines the query result row-for-row, so identical
inputs always give byte-identical specs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from .errors import EmptyViews, FormatMismatch, ProviderUnavailable, SchemaValidationExhausted, TooManyViews
from .query import QueryPlan, ResultTable
from .tags import TagSet

VEGA_LITE_SCHEMA_URL = "https://vega.github.io/schema/vega-lite/v5.json"

CHART_KINDS = ("bar", "grouped_bar", "line", "multi_line", "scatter", "heatmap", "histogram")

_KIND_PHRASE = {
    "bar": "bar chart",
    "grouped_bar": "grouped bar chart",
    "line": "line chart",
    "multi_line": "multi-series line chart",
    "scatter": "scatter plot",
    "heatmap": "heatmap",
    "histogram": "histogram",
}

# family -> preferred chart kinds, most specific first
FAMILY_CHARTS = {
    "ranking": ("bar",),
    "temporal_change": ("line", "multi_line"),
    "composition": ("bar",),
    "outlier": ("scatter",),
    "per_capita": ("bar",),
    "correlation": ("scatter",),
}


@dataclass(frozen=True)
class ChartTemplate:
    template_id: str
    chart_kind: str
    expected_format: dict  # role -> bound column name
    caption: str
    tags: TagSet
    compatible_families: tuple

    def to_json(self) -> dict:
        return {
            "template_id": self.template_id,
            "chart_kind": self.chart_kind,
            "expected_format": dict(self.expected_format),
            "caption": self.caption,
            "tags": self.tags.to_json(),
            "compatible_families": list(self.compatible_families),
        }


@dataclass
class ViewSpec:
    view_id: str
    grammar_spec: dict
    title: str
    description: str
    source_plan: QueryPlan | None
    linked_sentence_ids: set = field(default_factory=set)

    def to_json(self) -> dict:
        return {
            "view_id": self.view_id,
            "grammar_spec": self.grammar_spec,
            "title": self.title,
            "description": self.description,
            "source_plan": self.source_plan.to_json() if self.source_plan else None,
            "linked_sentence_ids": sorted(self.linked_sentence_ids),
        }


@dataclass
class Dashboard:
    dashboard_id: str
    views: list
    layout: dict

    def to_json(self) -> dict:
        return {
            "dashboard_id": self.dashboard_id,
            "views": [v.to_json() for v in self.views],
            "layout": self.layout,
        }


def _load_base_templates() -> list[dict]:
    ref = resources.files("storyloom.data").joinpath("chart_templates.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def fallback_caption(chart_kind: str, binding: dict) -> str:
    phrase = _KIND_PHRASE[chart_kind]
    if chart_kind == "histogram":
        return f"{phrase} of {binding['value']}"
    if chart_kind in ("bar", "grouped_bar"):
        return f"{phrase} of {binding['values']} by {binding['labels']}"
    if chart_kind == "heatmap":
        return f"{phrase} of {binding['value']} by {binding['x']} and {binding['y']}"
    return f"{phrase} of {binding['y']} by {binding['x']}"


class ViewLibrary:
    def __init__(self, catalog, gateway=None):
        self.catalog = catalog
        self.gateway = gateway
        self._base = _load_base_templates()

    def adapt_templates(self, schema) -> list[ChartTemplate]:
        measures = [c.name for c in schema.by_role("measure")]
        labels = [c.name for c in schema.columns
                  if c.semantic_role in ("geo", "category", "entity") and c.cardinality >= 2]
        times = [c.name for c in schema.by_role("time")]
        pools = {"measure": measures, "label": labels, "time": times}

        out: list[ChartTemplate] = []
        for base in self._base:
            for binding in self._bindings(base["expected_format"], pools):
                caption = self._caption(base["chart_kind"], binding)
                topic = {binding[r] for r, role in base["expected_format"].items() if role == "measure"}
                parts = [base["chart_kind"]] + [f"{k}={binding[k]}" for k in sorted(binding)]
                out.append(ChartTemplate(
                    template_id="chart|" + "|".join(parts) + f"@{schema.table_name}",
                    chart_kind=base["chart_kind"],
                    expected_format=binding,
                    caption=caption,
                    tags=TagSet.build(topic=topic, intent=()),
                    compatible_families=tuple(base["compatible_families"]),
                ))
        out.sort(key=lambda t: t.template_id)
        return out

    def _bindings(self, fmt: dict, pools: dict) -> list[dict]:
        roles = sorted(fmt)
        results: list[dict] = [{}]
        for role in roles:
            pool = pools.get(fmt[role], [])
            new = []
            for partial in results:
                for col in pool:
                    if col in partial.values():
                        continue
                    extended = dict(partial)
                    extended[role] = col
                    new.append(extended)
            results = new
        return results

    def _caption(self, chart_kind: str, binding: dict) -> str:
        if self.gateway is not None:
            try:
                parsed = self.gateway.chat(
                    "reasoning",
                    "Write one short caption for a "
                    f"{_KIND_PHRASE[chart_kind]} with fields {json.dumps(binding, sort_keys=True)}. "
                    'Return JSON: {"caption": "<text>"}',
                    {"type": "object", "required": ["caption"],
                     "properties": {"caption": {"type": "string", "minLength": 1}}},
                    schema_id="view_caption",
                )
                return parsed["caption"]
            except (ProviderUnavailable, SchemaValidationExhausted):
                pass
        return fallback_caption(chart_kind, binding)


def render_view(template: ChartTemplate, result: ResultTable, title: str,
                source_plan: QueryPlan | None = None, description: str = "") -> ViewSpec:
    names = [n for n, _ in result.columns]
    for role, column in template.expected_format.items():
        if column not in names:
            raise FormatMismatch(f"result lacks column {column!r} for role {role!r}")

    records = result.to_records()
    spec = _encode(template, records, title)
    digest = hashlib.sha1(json.dumps(
        {"t": template.template_id, "title": title, "data": records},
        sort_keys=True, default=str,
    ).encode()).hexdigest()[:10]
    return ViewSpec(
        view_id=f"v_{digest}",
        grammar_spec=spec,
        title=title,
        description=description or template.caption,
        source_plan=source_plan,
    )


def _encode(template: ChartTemplate, records: list[dict], title: str) -> dict:
    kind = template.chart_kind
    fmt = template.expected_format
    spec = {
        "$schema": VEGA_LITE_SCHEMA_URL,
        "title": title,
        "data": {"values": records},
        "params": [{"name": "pick", "select": "point"}],
    }
    if kind in ("bar", "grouped_bar"):
        spec["mark"] = {"type": "bar", "tooltip": True}
        spec["encoding"] = {
            "x": {"field": fmt["labels"], "type": "nominal", "sort": None},
            "y": {"field": fmt["values"], "type": "quantitative"},
        }
        if kind == "grouped_bar":
            spec["encoding"]["xOffset"] = {"field": fmt["group"], "type": "nominal"}
            spec["encoding"]["color"] = {"field": fmt["group"], "type": "nominal"}
    elif kind in ("line", "multi_line"):
        spec["mark"] = {"type": "line", "point": True, "tooltip": True}
        spec["encoding"] = {
            "x": {"field": fmt["x"], "type": "ordinal"},
            "y": {"field": fmt["y"], "type": "quantitative"},
        }
        if kind == "multi_line":
            spec["encoding"]["color"] = {"field": fmt["group"], "type": "nominal"}
    elif kind == "scatter":
        spec["mark"] = {"type": "point", "tooltip": True}
        spec["encoding"] = {
            "x": {"field": fmt["x"], "type": "quantitative"},
            "y": {"field": fmt["y"], "type": "quantitative"},
        }
        if "group" in fmt:
            spec["encoding"]["color"] = {"field": fmt["group"], "type": "nominal"}
    elif kind == "heatmap":
        spec["mark"] = {"type": "rect", "tooltip": True}
        spec["encoding"] = {
            "x": {"field": fmt["x"], "type": "nominal"},
            "y": {"field": fmt["y"], "type": "nominal"},
            "color": {"field": fmt["value"], "type": "quantitative"},
        }
    elif kind == "histogram":
        spec["mark"] = {"type": "bar", "tooltip": True}
        spec["encoding"] = {
            "x": {"field": fmt["value"], "type": "quantitative", "bin": True},
            "y": {"aggregate": "count", "type": "quantitative"},
        }
    else:
        raise FormatMismatch(f"unknown chart kind {kind!r}")
    return spec


def compose_dashboard(views: list) -> Dashboard:
    if not views:
        raise EmptyViews()
    if len(views) > 4:
        raise TooManyViews(str(len(views)))
    ids = [v.view_id for v in views]
    if len(set(ids)) != len(ids):
        raise TooManyViews("duplicate view ids in dashboard")
    if len(views) == 1:
        rows, cols = 1, 1
    elif len(views) == 2:
        rows, cols = 1, 2
    else:
        rows, cols = 2, 2
    layout = {
        "rows": rows,
        "cols": cols,
        "cells": [{"view_id": vid, "row": i // cols, "col": i % cols} for i, vid in enumerate(ids)],
    }
    digest = hashlib.sha1("|".join(ids).encode()).hexdigest()[:10]
    return Dashboard(dashboard_id=f"d_{digest}", views=list(views), layout=layout)


_VALIDATOR = None


def validate_grammar_spec(spec: dict) -> None:
    """Validate a spec against the vendored Vega-Lite v5 JSON schema."""
    global _VALIDATOR
    if _VALIDATOR is None:
        import jsonschema

        ref = resources.files("storyloom.data").joinpath("vega-lite-v5-schema.json")
        schema = json.loads(ref.read_text(encoding="utf-8"))
        _VALIDATOR = jsonschema.Draft7Validator(schema)
    errors = sorted(_VALIDATOR.iter_errors(spec), key=lambda e: e.json_path)
    if errors:
        raise FormatMismatch("; ".join(e.message for e in errors[:3]))

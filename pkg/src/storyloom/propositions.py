"""Proposition space: schema-driven narrative templates and their instances.

Templates are generated per analytical family for every admissible column
binding; instances are filled exclusively from query plan execution, never
invented. Phrasings live in ``data/proposition_templates.json`` so wording can
change without touching code.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConstraintViolation, NoMeasureColumns
from .query import QueryEngine, QueryPlan
from .tags import TagSet

MAX_PAIR_TEMPLATES = 12  # measure-pair families, per table, by descending variance

_RANK_WORDS_DESC = ("highest", "second highest", "third highest")
_RANK_WORDS_ASC = ("lowest", "second lowest", "third lowest")


def format_value(value) -> str:
    """Display formatting: reals to 1 decimal, everything else verbatim."""
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        if value != 0 and abs(value) < 1:
            return f"{value:.3g}"  # keep small ratios readable
        return f"{value:.1f}"
    return str(value)


@dataclass(frozen=True)
class PropositionTemplate:
    template_id: str
    family: str
    variant: str
    text_template: str
    slot_bindings: dict
    constraints: dict
    plan_params: dict

    def extract_slots(self, filled_text: str) -> dict | None:
        """Recover display values from a filled text (round-trip check)."""
        pattern = re.escape(self.text_template)
        pattern = re.sub(r"\\{(\w+)\\}", r"(?P<\1>.+?)", pattern)
        m = re.fullmatch(pattern, filled_text)
        return m.groupdict() if m else None


@dataclass(frozen=True)
class PropositionInstance:
    instance_id: str
    template_id: str
    family: str
    filled_text: str
    values: dict  # slot -> full-precision value
    display_values: dict  # slot -> string as shown in filled_text
    tags: TagSet
    plan: QueryPlan
    grounding: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "template_id": self.template_id,
            "family": self.family,
            "filled_text": self.filled_text,
            "values": self.values,
            "tags": self.tags.to_json(),
            "plan": self.plan.to_json(),
            "grounding": self.grounding,
        }


def _load_template_defs() -> list[dict]:
    ref = resources.files("storyloom.data").joinpath("proposition_templates.json")
    return json.loads(ref.read_text(encoding="utf-8"))


class PropositionSpace:
    def __init__(self, catalog, engine: QueryEngine | None = None):
        self.catalog = catalog
        self.engine = engine or QueryEngine(catalog)
        self._defs = _load_template_defs()

    # --- template generation -------------------------------------------

    def generate_templates(self, schema) -> list[PropositionTemplate]:
        measures = [c.name for c in schema.by_role("measure")]
        if not measures:
            raise NoMeasureColumns(schema.table_name)
        labels = [c.name for c in schema.columns
                  if c.semantic_role in ("geo", "category", "entity") and c.cardinality >= 2]
        times = [c.name for c in schema.by_role("time")]

        templates: list[PropositionTemplate] = []
        for d in self._defs:
            templates.extend(self._bind(d, schema, measures, labels, times))
        templates.sort(key=lambda t: t.template_id)
        return templates

    def _bind(self, d: dict, schema, measures, labels, times) -> list[PropositionTemplate]:
        family, variant = d["family"], d["variant"]
        table = schema.table_name
        out = []

        def make(binding: dict) -> PropositionTemplate:
            key_parts = [family, variant] + [f"{k}={v}" for k, v in sorted(binding.items())]
            return PropositionTemplate(
                template_id="|".join(key_parts) + f"@{table}",
                family=family,
                variant=variant,
                text_template=d["text_template"],
                slot_bindings=binding,
                constraints=dict(d["constraints"]),
                plan_params={"table": table, **binding},
            )

        if family == "ranking":
            needs_time = variant.startswith("with_time")
            if needs_time and not times:
                return []
            if not needs_time and times:
                return []  # prefer the time-sliced variants when time exists
            for label in labels:
                for metric in measures:
                    if needs_time:
                        for t in times:
                            out.append(make({"label": label, "metric": metric, "time": t}))
                    else:
                        out.append(make({"label": label, "metric": metric}))

        elif family == "temporal_change":
            if not times:
                return []
            for t in times:
                if schema.column(t).cardinality < d["constraints"].get("min_timepoints", 2):
                    continue
                for metric in measures:
                    if variant == "per_label":
                        for label in labels:
                            out.append(make({"label": label, "metric": metric, "time": t}))
                    else:
                        out.append(make({"metric": metric, "time": t}))

        elif family == "composition":
            for group in labels:
                for metric in measures:
                    out.append(make({"group": group, "metric": metric}))

        elif family == "outlier":
            for label in labels:
                for metric in measures:
                    out.append(make({"label": label, "metric": metric}))

        elif family in ("per_capita", "correlation"):
            pairs = self._measure_pairs(schema, measures, ordered=(family == "per_capita"))
            label = labels[0] if labels else None
            if label is None:
                return []
            for a, b in pairs:
                if family == "per_capita":
                    out.append(make({"label": label, "metric_a": a, "metric_b": b}))
                else:
                    out.append(make({"entity": label, "metric_a": a, "metric_b": b}))

        return out

    def _measure_pairs(self, schema, measures, ordered: bool) -> list[tuple]:
        table = self.catalog.table(schema.table_name)

        def variance(col):
            vals = [v for v in table.column_values(col) if isinstance(v, (int, float))]
            if len(vals) < 2:
                return 0.0
            m = sum(vals) / len(vals)
            return sum((v - m) ** 2 for v in vals) / len(vals)

        var = {m: variance(m) for m in measures}
        if ordered:
            pairs = [(a, b) for a in measures for b in measures if a != b]
        else:
            pairs = [(a, b) for i, a in enumerate(measures) for b in measures[i + 1:]]
        pairs.sort(key=lambda p: (-(var[p[0]] + var[p[1]]), p))
        return pairs[:MAX_PAIR_TEMPLATES]

    # --- instantiation --------------------------------------------------

    def instantiate(self, template: PropositionTemplate) -> list[PropositionInstance]:
        builder = getattr(self, f"_fill_{template.family}")
        try:
            instances = builder(template)
        except ConstraintViolation:
            return []
        instances.sort(key=lambda i: (i.template_id, sorted(i.display_values.items())))
        return instances

    def all_instances(self, schema) -> list[PropositionInstance]:
        out = []
        for template in self.generate_templates(schema):
            out.extend(self.instantiate(template))
        return out

    def _schema(self, template):
        return self.catalog.schema(template.plan_params["table"])

    def _instance(self, template, values: dict, plan: QueryPlan, tags: TagSet,
                  grounding: dict) -> PropositionInstance:
        display = {k: format_value(v) for k, v in values.items()}
        filled = template.text_template
        for slot, text in display.items():
            filled = filled.replace("{%s}" % slot, text)
        digest = hashlib.sha1((template.template_id + json.dumps(display, sort_keys=True)).encode()).hexdigest()[:10]
        return PropositionInstance(
            instance_id=f"p_{digest}",
            template_id=template.template_id,
            family=template.family,
            filled_text=filled,
            values=values,
            display_values=display,
            tags=tags,
            plan=plan,
            grounding=grounding,
        )

    def _tagset(self, schema, label_col=None, label_value=None, metrics=(),
                times=(), family=None) -> TagSet:
        geo, time_vals = set(), set()
        if label_col is not None and label_value is not None:
            if schema.column(label_col).semantic_role == "geo":
                geo.add(str(label_value))
        time_vals |= {str(t) for t in times}
        return TagSet.build(
            geo=geo,
            topic=set(metrics),
            time=time_vals,
            intent={family} if family else (),
        )

    def _time_values(self, template) -> list:
        time_col = template.plan_params["time"]
        table = self.catalog.table(template.plan_params["table"])
        return sorted({v for v in table.column_values(time_col) if v is not None}, key=str)

    def _fill_ranking(self, template) -> list[PropositionInstance]:
        schema = self._schema(template)
        p = template.plan_params
        direction = "asc" if template.variant.endswith("_asc") else "desc"
        rank_words = _RANK_WORDS_ASC if direction == "asc" else _RANK_WORDS_DESC
        k = template.constraints.get("top_k", 3)
        out = []

        time_slices = [None]
        if "time" in p:
            time_slices = self._time_values(template)
        for tv in time_slices:
            bindings = {"table": p["table"], "label": p["label"], "metric": p["metric"],
                        "direction": direction}
            if tv is not None:
                bindings["filters"] = ((p["time"], "=", tv),)
            plan = self.engine.family_plan("ranking", bindings, template.constraints)
            result = self.engine.execute(plan)
            for rank, row in enumerate(result.rows[:min(k, len(rank_words))]):
                label_value, metric_value = row[0], row[1]
                if metric_value is None:
                    continue
                values = {"label": label_value, "metric": p["metric"],
                          "rank_desc": rank_words[rank], "value": metric_value}
                if tv is not None:
                    values["time"] = tv
                tags = self._tagset(schema, p["label"], label_value, [p["metric"]],
                                    [tv] if tv is not None else (), "ranking")
                out.append(self._instance(template, values, plan, tags,
                                          {"rank": rank + 1, "direction": direction}))
        return out

    def _fill_temporal_change(self, template) -> list[PropositionInstance]:
        schema = self._schema(template)
        p = template.plan_params
        out = []
        if template.variant == "per_label":
            table = self.catalog.table(p["table"])
            label_values = sorted({v for v in table.column_values(p["label"]) if v is not None}, key=str)
            slices = [(lv, ((p["label"], "=", lv),)) for lv in label_values]
        else:
            slices = [(None, ())]
        for label_value, filters in slices:
            bindings = {"table": p["table"], "time": p["time"], "metric": p["metric"],
                        "filters": filters}
            plan = self.engine.family_plan("temporal_change", bindings, template.constraints)
            result = self.engine.execute(plan)
            for t0, t1, pct in result.rows:
                if pct is None:
                    continue
                values = {"metric": p["metric"], "t0": t0, "t1": t1,
                          "pct": abs(pct), "direction": "rose" if pct >= 0 else "fell"}
                if label_value is not None:
                    values["label"] = label_value
                tags = self._tagset(schema, p.get("label"), label_value, [p["metric"]],
                                    [t0, t1], "temporal_change")
                out.append(self._instance(template, values, plan, tags, {"pct_change": pct}))
        return out

    def _fill_composition(self, template) -> list[PropositionInstance]:
        schema = self._schema(template)
        p = template.plan_params
        bindings = {"table": p["table"], "group": p["group"], "metric": p["metric"]}
        plan = self.engine.family_plan("composition", bindings, template.constraints)
        result = self.engine.execute(plan)
        k = template.constraints.get("top_k", 3)
        out = []
        for row in result.rows[:k]:
            group_value, share = row[0], row[1]
            if share is None:
                continue
            values = {"group": group_value, "metric": p["metric"], "share": share * 100.0}
            tags = self._tagset(schema, p["group"], group_value, [p["metric"]], (), "composition")
            out.append(self._instance(template, values, plan, tags, {"share": share}))
        return out

    def _fill_outlier(self, template) -> list[PropositionInstance]:
        schema = self._schema(template)
        p = template.plan_params
        bindings = {"table": p["table"], "label": p["label"], "metric": p["metric"]}
        plan = self.engine.family_plan("outlier", bindings, template.constraints)
        result = self.engine.execute(plan)
        z_idx = result.column_index("zscore")
        out = []
        for row in result.rows:
            label_value, z = row[0], row[z_idx]
            values = {"label": label_value, "metric": p["metric"], "z": z}
            tags = self._tagset(schema, p["label"], label_value, [p["metric"]], (), "outlier")
            out.append(self._instance(template, values, plan, tags,
                                      {"zscore": z, "value": row[1]}))
        return out

    def _fill_per_capita(self, template) -> list[PropositionInstance]:
        schema = self._schema(template)
        p = template.plan_params
        bindings = {"table": p["table"], "label": p["label"],
                    "metric_a": p["metric_a"], "metric_b": p["metric_b"]}
        plan = self.engine.family_plan("per_capita", bindings, template.constraints)
        result = self.engine.execute(plan)
        r_idx = result.column_index("ratio")
        k = template.constraints.get("top_k", 3)
        out = []
        for row in result.rows[:k]:
            label_value, ratio = row[0], row[r_idx]
            if ratio is None:
                continue
            values = {"label": label_value, "metric_a": p["metric_a"],
                      "metric_b": p["metric_b"], "ratio": ratio}
            tags = self._tagset(schema, p["label"], label_value,
                                [p["metric_a"], p["metric_b"]], (), "per_capita")
            out.append(self._instance(template, values, plan, tags, {"ratio": ratio}))
        return out

    def _fill_correlation(self, template) -> list[PropositionInstance]:
        schema = self._schema(template)
        p = template.plan_params
        bindings = {"table": p["table"], "entity": p["entity"],
                    "metric_a": p["metric_a"], "metric_b": p["metric_b"]}
        plan = self.engine.family_plan("correlation", bindings, template.constraints)
        result = self.engine.execute(plan)
        r = result.rows[0][0] if result.rows else None
        if r is None:
            return []
        values = {"metric_a": p["metric_a"], "metric_b": p["metric_b"],
                  "r": r, "direction": "positively" if r >= 0 else "negatively"}
        tags = self._tagset(schema, None, None, [p["metric_a"], p["metric_b"]], (), "correlation")
        return [self._instance(template, values, plan, tags, {"r": r})]

    # --- export ----------------------------------------------------------

    def dump_instances(self, schema) -> str:
        return json.dumps([i.to_json() for i in self.all_instances(schema)], indent=2)

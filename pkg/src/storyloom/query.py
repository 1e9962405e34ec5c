"""Deterministic in-memory query engine.

Executes the query plans behind proposition instances. Stage order is fixed:
filters -> group -> aggregate -> derived -> sort -> limit. Plans are immutable
and execution is pure, so identical plan + identical table always yields an
identical result.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConstraintViolation, MissingBinding, TypeMismatch, UnknownColumn

FAMILIES = (
    "ranking",
    "temporal_change",
    "composition",
    "outlier",
    "per_capita",
    "correlation",
)

AGG_FNS = ("sum", "mean", "count", "min", "max")
FILTER_OPS = ("=", "!=", "<", "<=", ">", ">=", "in")

DEFAULT_ZSCORE_THRESHOLD = 2.0


@dataclass(frozen=True)
class Derived:
    kind: str  # pct_change | share_of_total | ratio | zscore | pearson
    column_a: str | None = None
    column_b: str | None = None
    threshold: float | None = None


@dataclass(frozen=True)
class QueryPlan:
    table: str
    filters: tuple = ()  # (column, op, literal)
    group_by: tuple = ()
    aggregate: tuple = ()  # (fn, column) pairs; fn=count may use column=None
    sort: tuple | None = None  # (column, "asc"|"desc")
    limit: int | None = None
    derived: Derived | None = None

    def to_json(self) -> dict:
        return {
            "table": self.table,
            "filters": [list(f) for f in self.filters],
            "group_by": list(self.group_by),
            "aggregate": [list(a) for a in self.aggregate],
            "sort": list(self.sort) if self.sort else None,
            "limit": self.limit,
            "derived": self.derived.__dict__.copy() if self.derived else None,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass
class ResultTable:
    columns: list = field(default_factory=list)  # (name, data_kind)
    rows: list = field(default_factory=list)

    def column_index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.columns):
            if n == name:
                return i
        raise UnknownColumn(name)

    def column_values(self, name: str) -> list:
        i = self.column_index(name)
        return [r[i] for r in self.rows]

    def to_records(self) -> list[dict]:
        names = [n for n, _ in self.columns]
        return [dict(zip(names, r)) for r in self.rows]


def _matches(value, op, literal) -> bool:
    if value is None:
        return False
    if op == "=":
        return value == literal
    if op == "!=":
        return value != literal
    if op == "in":
        return value in literal
    try:
        if op == "<":
            return value < literal
        if op == "<=":
            return value <= literal
        if op == ">":
            return value > literal
        if op == ">=":
            return value >= literal
    except TypeError:
        raise TypeMismatch(f"cannot compare {value!r} {op} {literal!r}")
    raise UnknownColumn(f"unknown filter op {op!r}")


def _require_numeric(values, fn, column):
    nums = []
    for v in values:
        if v is None:
            continue
        if not isinstance(v, (int, float)):
            raise TypeMismatch(f"{fn} over non-numeric column {column!r}")
        nums.append(v)
    return nums


def _aggregate(fn: str, values: list, column: str):
    if fn == "count":
        return sum(1 for v in values if v is not None)
    nums = _require_numeric(values, fn, column)
    if not nums:
        return None
    if fn == "sum":
        return sum(nums)
    if fn == "mean":
        return sum(nums) / len(nums)
    if fn == "min":
        return min(nums)
    if fn == "max":
        return max(nums)
    raise TypeMismatch(f"unknown aggregate fn {fn!r}")


def pearson(xs: list, ys: list) -> float | None:
    """Pearson correlation over paired values; None when undefined."""
    pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
    if len(pairs) < 2:
        return None
    xs2 = [p[0] for p in pairs]
    ys2 = [p[1] for p in pairs]
    n = len(pairs)
    mx = sum(xs2) / n
    my = sum(ys2) / n
    sxy = sum((x - mx) * (y - my) for x, y in pairs)
    sxx = sum((x - mx) ** 2 for x in xs2)
    syy = sum((y - my) ** 2 for y in ys2)
    # sqrt each factor separately: the product can underflow to 0.0 for
    # near-constant columns even when both variances are nonzero
    denom = math.sqrt(sxx) * math.sqrt(syy)
    if denom == 0:
        return None
    r = sxy / denom
    return max(-1.0, min(1.0, r))


class QueryEngine:
    """Executes plans against a catalog of immutable tables."""

    def __init__(self, catalog):
        self.catalog = catalog

    def execute(self, plan: QueryPlan) -> ResultTable:
        table = self.catalog.table(plan.table)
        schema = table.schema
        names = [c.name for c in schema.columns]
        kinds = {c.name: c.data_kind for c in schema.columns}

        for col, _, _ in plan.filters:
            if col not in names:
                raise UnknownColumn(col)
        for col in plan.group_by:
            if col not in names:
                raise UnknownColumn(col)
        for _, col in plan.aggregate:
            if col is not None and col not in names:
                raise UnknownColumn(col)

        rows = [dict(zip(names, r)) for r in table.rows()]
        for col, op, literal in plan.filters:
            rows = [r for r in rows if _matches(r[col], op, literal)]

        if plan.aggregate:
            out_cols: list[tuple] = [(g, kinds[g]) for g in plan.group_by]
            agg_names = []
            for fn, col in plan.aggregate:
                name = "count" if fn == "count" else col
                agg_names.append((fn, col, name))
                out_cols.append((name, "integer" if fn == "count" else "real"))

            groups: dict[tuple, list] = {}
            order: list[tuple] = []
            for r in rows:
                key = tuple(r[g] for g in plan.group_by)
                if any(k is None for k in key):
                    continue  # rows with missing group keys drop out
                if key not in groups:
                    groups[key] = []
                    order.append(key)
                groups[key].append(r)
            out_rows = []
            for key in sorted(order, key=lambda k: tuple(str(x) for x in k)):
                members = groups[key]
                vals = tuple(
                    _aggregate(fn, [m[col] for m in members] if col else members, col)
                    for fn, col, _ in agg_names
                )
                out_rows.append(key + vals)
            result = ResultTable(columns=out_cols, rows=out_rows)
        else:
            out_cols = [(n, kinds[n]) for n in names]
            result = ResultTable(columns=out_cols, rows=[tuple(r[n] for n in names) for r in rows])

        if plan.derived is not None:
            result = self._apply_derived(result, plan)

        if plan.sort is not None:
            result = _sorted_result(result, plan.sort)

        if plan.limit is not None:
            result.rows = result.rows[: plan.limit]

        return result

    def _apply_derived(self, result: ResultTable, plan: QueryPlan) -> ResultTable:
        d = plan.derived
        if d.kind == "share_of_total":
            idx = result.column_index(d.column_a)
            total = sum(r[idx] for r in result.rows if r[idx] is not None)
            rows = []
            for r in result.rows:
                v = r[idx]
                share = None if (v is None or total == 0) else v / total
                rows.append(r[:idx] + (share,) + r[idx + 1:])
            return ResultTable(columns=result.columns, rows=rows)

        if d.kind == "pct_change":
            # expects a (period, value) shape ordered by period ascending
            if len(plan.group_by) != 1:
                raise ConstraintViolation("pct_change needs exactly one group column")
            t_idx = result.column_index(plan.group_by[0])
            v_idx = result.column_index(d.column_a)
            ordered = sorted(result.rows, key=lambda r: (str(r[t_idx]), r[t_idx] is None))
            rows = []
            for prev, cur in zip(ordered, ordered[1:]):
                v0, v1 = prev[v_idx], cur[v_idx]
                if v0 in (None, 0) or v1 is None:
                    pct = None
                else:
                    pct = (v1 - v0) / v0 * 100.0
                rows.append((prev[t_idx], cur[t_idx], pct))
            cols = [("from", "text"), ("to", "text"), ("pct_change", "real")]
            return ResultTable(columns=cols, rows=rows)

        if d.kind == "ratio":
            a = result.column_index(d.column_a)
            b = result.column_index(d.column_b)
            rows = []
            for r in result.rows:
                va, vb = r[a], r[b]
                ratio = None if (va is None or vb in (None, 0)) else va / vb
                rows.append(r + (ratio,))
            return ResultTable(columns=result.columns + [("ratio", "real")], rows=rows)

        if d.kind == "zscore":
            idx = result.column_index(d.column_a)
            vals = [r[idx] for r in result.rows if r[idx] is not None]
            if len(vals) < 2:
                return ResultTable(columns=result.columns + [("zscore", "real")], rows=[])
            mean = sum(vals) / len(vals)
            var = sum((v - mean) ** 2 for v in vals) / len(vals)
            std = math.sqrt(var)
            threshold = d.threshold if d.threshold is not None else DEFAULT_ZSCORE_THRESHOLD
            rows = []
            for r in result.rows:
                v = r[idx]
                if v is None or std == 0:
                    continue
                z = (v - mean) / std
                if abs(z) > threshold:
                    rows.append(r + (z,))
            return ResultTable(columns=result.columns + [("zscore", "real")], rows=rows)

        if d.kind == "pearson":
            xs = result.column_values(d.column_a)
            ys = result.column_values(d.column_b)
            r = pearson(xs, ys)
            return ResultTable(columns=[("r", "real")], rows=[(r,)])

        raise ConstraintViolation(f"unknown derived kind {d.kind!r}")

    # --- family plans -------------------------------------------------

    def family_plan(self, family: str, bindings: dict, constraints: dict | None = None) -> QueryPlan:
        constraints = dict(constraints or {})
        if family not in FAMILIES:
            raise MissingBinding(f"unknown family {family!r}")
        builder = getattr(self, f"_plan_{family}")
        return builder(bindings, constraints)

    def _need(self, bindings: dict, *keys):
        for k in keys:
            if k not in bindings or bindings[k] is None:
                raise MissingBinding(k)
        return [bindings[k] for k in keys]

    def _schema(self, bindings):
        table = bindings.get("table")
        if not table:
            raise MissingBinding("table")
        return self.catalog.schema(table)

    @staticmethod
    def _base_filters(bindings) -> tuple:
        return tuple(bindings.get("filters", ()))

    def _plan_ranking(self, bindings, constraints):
        table, label, metric = self._need(bindings, "table", "label", "metric")
        schema = self._schema(bindings)
        if schema.column(label).cardinality < constraints.get("min_groups", 2):
            raise ConstraintViolation(f"ranking needs >= {constraints.get('min_groups', 2)} groups")
        direction = bindings.get("direction", "desc")
        k = constraints.get("top_k", 3)
        return QueryPlan(
            table=table,
            filters=self._base_filters(bindings),
            group_by=(label,),
            aggregate=(("mean", metric),),
            sort=(metric, direction),
            limit=k,
        )

    def _plan_temporal_change(self, bindings, constraints):
        table, time, metric = self._need(bindings, "table", "time", "metric")
        schema = self._schema(bindings)
        min_tp = constraints.get("min_timepoints", 2)
        if schema.column(time).cardinality < min_tp:
            raise ConstraintViolation(f"temporal_change needs >= {min_tp} timepoints")
        return QueryPlan(
            table=table,
            filters=self._base_filters(bindings),
            group_by=(time,),
            aggregate=(("mean", metric),),
            derived=Derived(kind="pct_change", column_a=metric),
        )

    def _plan_composition(self, bindings, constraints):
        table, group, metric = self._need(bindings, "table", "group", "metric")
        schema = self._schema(bindings)
        if schema.column(group).cardinality < constraints.get("min_groups", 2):
            raise ConstraintViolation("composition needs >= 2 groups")
        return QueryPlan(
            table=table,
            filters=self._base_filters(bindings),
            group_by=(group,),
            aggregate=(("sum", metric),),
            derived=Derived(kind="share_of_total", column_a=metric),
            sort=(metric, "desc"),
        )

    def _plan_outlier(self, bindings, constraints):
        table, label, metric = self._need(bindings, "table", "label", "metric")
        threshold = constraints.get("zscore_threshold", DEFAULT_ZSCORE_THRESHOLD)
        return QueryPlan(
            table=table,
            filters=self._base_filters(bindings),
            group_by=(label,),
            aggregate=(("mean", metric),),
            derived=Derived(kind="zscore", column_a=metric, threshold=threshold),
            sort=(metric, "desc"),
        )

    def _plan_per_capita(self, bindings, constraints):
        table, label, metric_a, metric_b = self._need(bindings, "table", "label", "metric_a", "metric_b")
        return QueryPlan(
            table=table,
            filters=self._base_filters(bindings),
            group_by=(label,),
            aggregate=(("mean", metric_a), ("mean", metric_b)),
            derived=Derived(kind="ratio", column_a=metric_a, column_b=metric_b),
            sort=("ratio", "desc"),
        )

    def _plan_correlation(self, bindings, constraints):
        table, entity, metric_a, metric_b = self._need(bindings, "table", "entity", "metric_a", "metric_b")
        schema = self._schema(bindings)
        if schema.column(entity).cardinality < constraints.get("min_groups", 2):
            raise ConstraintViolation("correlation needs >= 2 entities")
        return QueryPlan(
            table=table,
            filters=self._base_filters(bindings),
            group_by=(entity,),
            aggregate=(("mean", metric_a), ("mean", metric_b)),
            derived=Derived(kind="pearson", column_a=metric_a, column_b=metric_b),
        )


def _sorted_result(result: ResultTable, sort: tuple) -> ResultTable:
    col, direction = sort
    idx = result.column_index(col)
    # tie-break: ascending lexical order of the remaining columns, for
    # deterministic top-k
    tie = lambda r: tuple(str(v) for i, v in enumerate(r) if i != idx)
    rows = sorted(result.rows, key=tie)
    none_last = [r for r in rows if r[idx] is None]
    present = [r for r in rows if r[idx] is not None]
    present.sort(key=lambda r: r[idx], reverse=(direction == "desc"))
    return ResultTable(columns=result.columns, rows=present + none_last)

"""Dataset catalog: CSV ingestion, typed schemas and semantic column roles.

Role assignment is deterministic so that re-ingesting identical bytes always
produces an identical schema. Columns get one of five semantic roles (geo,
time, measure, category, entity) which later drive proposition and chart
template generation.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field

from .errors import DuplicateTable, EmptyTable, MalformedRow, UnknownTable
from .query import FAMILIES

DATA_KINDS = ("integer", "real", "text", "date")
ROLES = ("geo", "time", "measure", "category", "entity")

TIME_NAMES = {"year", "date", "month", "quarter", "week"}
GEO_GAZETTEER = {"borough", "city", "country", "region", "destination", "area"}

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_YEAR = re.compile(r"^(1[89]\d\d|20\d\d)$")

# a column counts as numeric when at least this share of non-null cells parse
NUMERIC_SHARE = 0.95


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    data_kind: str
    semantic_role: str
    unit: str | None = None
    cardinality: int = 0


@dataclass(frozen=True)
class TableSchema:
    table_name: str
    columns: tuple[ColumnSpec, ...]
    row_count: int
    category_tags: frozenset[str] = frozenset()

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def by_role(self, role: str) -> list[ColumnSpec]:
        return [c for c in self.columns if c.semantic_role == role]

    def to_json(self) -> dict:
        return {
            "table_name": self.table_name,
            "columns": [
                {
                    "name": c.name,
                    "data_kind": c.data_kind,
                    "semantic_role": c.semantic_role,
                    "unit": c.unit,
                    "cardinality": c.cardinality,
                }
                for c in self.columns
            ],
            "row_count": self.row_count,
            "category_tags": sorted(self.category_tags),
        }


@dataclass
class DataTable:
    """Columnar storage: column name -> list of cell values (None = missing)."""

    schema: TableSchema
    columns: dict[str, list] = field(default_factory=dict)

    def column_values(self, name: str) -> list:
        if name not in self.columns:
            raise KeyError(name)
        return self.columns[name]

    @property
    def row_count(self) -> int:
        return self.schema.row_count

    def rows(self) -> list[tuple]:
        names = [c.name for c in self.schema.columns]
        cols = [self.columns[n] for n in names]
        return list(zip(*cols)) if cols else []


def _parse_cell(raw: str):
    """Typed value for a raw CSV cell; empty string means missing."""
    s = raw.strip()
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def _infer_column(name: str, raw_values: list[str], row_count: int) -> tuple[ColumnSpec, list]:
    non_null_raw = [v.strip() for v in raw_values if v.strip() != ""]
    parsed = [_parse_cell(v) for v in raw_values]
    non_null = [v for v in parsed if v is not None]

    numerics = [v for v in non_null if isinstance(v, (int, float))]
    is_numeric = bool(non_null) and len(numerics) >= NUMERIC_SHARE * len(non_null)
    all_int = bool(numerics) and all(isinstance(v, int) for v in numerics)
    all_iso_dates = bool(non_null_raw) and all(_ISO_DATE.match(v) for v in non_null_raw)
    all_years = bool(non_null_raw) and all(_YEAR.match(v) for v in non_null_raw)

    lowered = name.strip().lower()
    if all_iso_dates:
        data_kind = "date"
        # keep dates as the original ISO strings so they round-trip losslessly
        parsed = [v.strip() if v.strip() != "" else None for v in raw_values]
        non_null = [v for v in parsed if v is not None]
    elif is_numeric:
        data_kind = "integer" if all_int else "real"
        # stray non-numeric cells in a numeric column count as missing
        parsed = [v if isinstance(v, (int, float)) else None for v in parsed]
        non_null = [v for v in parsed if v is not None]
    else:
        data_kind = "text"
        parsed = [str(v) if v is not None else None for v in parsed]
        non_null = [v for v in parsed if v is not None]

    cardinality = len(set(non_null))

    if lowered in TIME_NAMES or all_iso_dates or (all_years and data_kind == "integer"):
        role = "time"
    elif lowered in GEO_GAZETTEER:
        role = "geo"
    elif data_kind in ("integer", "real"):
        role = "measure"
    elif cardinality <= max(20, 0.05 * row_count):
        role = "category"
    else:
        role = "entity"

    return ColumnSpec(name=name, data_kind=data_kind, semantic_role=role, cardinality=cardinality), parsed


class Catalog:
    """Registry of ingested tables; immutable after ingestion."""

    def __init__(self):
        self._tables: dict[str, DataTable] = {}

    def ingest_table(self, payload: bytes, name: str, category_tags=()) -> TableSchema:
        if not name:
            raise MalformedRow("table name must be non-empty")
        if name in self._tables:
            raise DuplicateTable(name)

        text = payload.decode("utf-8-sig")
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyTable(name)
        rows = [r for r in reader if r]
        if not rows:
            raise EmptyTable(name)
        width = len(header)
        for i, r in enumerate(rows):
            if len(r) != width:
                raise MalformedRow(f"row {i + 2} has {len(r)} cells, expected {width}")

        specs: list[ColumnSpec] = []
        data: dict[str, list] = {}
        seen = set()
        for j, col_name in enumerate(header):
            if col_name in seen:
                raise MalformedRow(f"duplicate column name {col_name!r}")
            seen.add(col_name)
            raw = [r[j] for r in rows]
            spec, values = _infer_column(col_name, raw, len(rows))
            specs.append(spec)
            data[col_name] = values

        schema = TableSchema(
            table_name=name,
            columns=tuple(specs),
            row_count=len(rows),
            category_tags=frozenset(category_tags),
        )
        self._tables[name] = DataTable(schema=schema, columns=data)
        return schema

    def schema(self, name: str) -> TableSchema:
        return self.table(name).schema

    def table(self, name: str) -> DataTable:
        if name not in self._tables:
            raise UnknownTable(name)
        return self._tables[name]

    def table_names(self) -> list[str]:
        return sorted(self._tables)

    def derive_tag_vocabulary(self, schema: TableSchema) -> dict[str, set]:
        if schema.table_name not in self._tables:
            raise UnknownTable(schema.table_name)
        table = self._tables[schema.table_name]
        geo: set[str] = set()
        time: set[str] = set()
        for col in schema.columns:
            values = {str(v) for v in table.column_values(col.name) if v is not None}
            if col.semantic_role == "geo":
                geo |= values
            elif col.semantic_role == "time":
                time |= values
        topic = set(schema.category_tags) | {c.name for c in schema.by_role("measure")}
        return {"geo": geo, "topic": topic, "time": time, "intent": set(FAMILIES)}

    def export_schema_json(self, name: str) -> str:
        return json.dumps(self.schema(name).to_json(), indent=2)

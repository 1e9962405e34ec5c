import pytest

from storyloom.catalog import Catalog
from storyloom.errors import DuplicateTable, EmptyTable, MalformedRow, UnknownTable

SMALL = b"city,year,sales\nParis,2020,10\nLyon,2021,12.5\n"


def test_roles_inferred(catalog):
    schema = catalog.schema("travel")
    roles = {c.name: c.semantic_role for c in schema.columns}
    assert roles["destination"] == "geo" or roles["region"] == "geo"
    assert roles["year"] == "time"
    assert roles["cost"] == "measure"
    assert roles["rating"] == "measure"


def test_row_count_and_cardinality(catalog):
    schema = catalog.schema("travel")
    assert schema.row_count == 36
    assert schema.column("destination").cardinality == 12
    assert schema.column("year").cardinality == 3


def test_numeric_parsing():
    cat = Catalog()
    schema = cat.ingest_table(SMALL, name="s")
    table = cat.table("s")
    assert table.column_values("sales") == [10, 12.5]
    assert schema.column("sales").data_kind == "real"


def test_duplicate_table_rejected():
    cat = Catalog()
    cat.ingest_table(SMALL, name="s")
    with pytest.raises(DuplicateTable):
        cat.ingest_table(SMALL, name="s")


def test_empty_table_rejected():
    with pytest.raises(EmptyTable):
        Catalog().ingest_table(b"a,b\n", name="e")


def test_ragged_row_rejected():
    with pytest.raises(MalformedRow):
        Catalog().ingest_table(b"a,b\n1,2\n3\n", name="r")


def test_unknown_table():
    with pytest.raises(UnknownTable):
        Catalog().schema("nope")


def test_quoted_fields_with_commas():
    cat = Catalog()
    cat.ingest_table(b'name,v\n"Tan, Ltd",3\n"x",4\n', name="q")
    assert cat.table("q").column_values("name") == ["Tan, Ltd", "x"]


def test_tag_vocabulary(catalog):
    vocab = catalog.derive_tag_vocabulary(catalog.schema("travel"))
    assert "Porto" in vocab["geo"]
    assert "Asia" in vocab["geo"]
    assert "cost" in vocab["topic"]
    assert "travel" in vocab["topic"]
    assert "2024" in vocab["time"]
    assert "ranking" in vocab["intent"]


def test_schema_export_is_json(catalog):
    import json

    data = json.loads(catalog.export_schema_json("travel"))
    assert data["table_name"] == "travel"
    assert {c["name"] for c in data["columns"]} >= {"destination", "cost"}

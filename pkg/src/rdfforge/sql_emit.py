"""SQL serialization of the schema and records, and SQLite materialization.

The emitted script is portable text: one `;`-terminated statement per line,
identifiers double-quoted, strings single-quoted with `''` escaping, blobs as
hex literals.  Loading the script into a fresh database reproduces the
directly created one exactly.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass

from .analysis import StorageClass
from .relational_model import (
    ManyToManyTable,
    Record,
    RelationalSchema,
    RES_ID_TABLE,
    ResourceIdMap,
)

_SQL_TYPES = {
    StorageClass.TEXT: "TEXT",
    StorageClass.REAL: "REAL",
    StorageClass.INTEGER: "INTEGER",
    StorageClass.BLOB: "BLOB",
}

RES_ID_DDL = f'CREATE TABLE "{RES_ID_TABLE}" ("uri" TEXT PRIMARY KEY, "id" INTEGER UNIQUE);'


@dataclass
class SqlScript:
    ddl: str
    dml: str

    @property
    def text(self) -> str:
        return self.ddl + self.dml


def quote_identifier(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def sql_value(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bytes):
        return "X'" + value.hex() + "'"
    return "'" + str(value).replace("'", "''") + "'"


def _mm_column_defs(mm: ManyToManyTable) -> list[tuple[str, str]]:
    cols = [(mm.subject_column, "INTEGER")]
    if mm.object_kind.value == "entity_ref":
        cols.append((mm.object_column, "INTEGER"))
    elif mm.object_kind.value == "dangling_uri":
        cols.append((mm.object_column, "TEXT"))
    else:
        cols.append((mm.object_column, _SQL_TYPES[mm.value_storage]))
    if mm.lang_column:
        cols.append(("lang", "TEXT"))
    return cols


def mm_column_names(mm: ManyToManyTable) -> list[str]:
    return [name for name, _ in _mm_column_defs(mm)]


def emit_ddl(schema: RelationalSchema) -> str:
    """CREATE TABLE statements for all entity and join tables plus `_res_id`."""
    lines: list[str] = []
    for table in sorted(schema.tables, key=lambda t: t.name):
        parts = []
        fks = []
        for col in table.columns:
            if col.name == "id":
                parts.append('"id" INTEGER PRIMARY KEY')
                continue
            parts.append(f"{quote_identifier(col.name)} {_SQL_TYPES[col.storage]}")
            if col.references and col.storage == StorageClass.INTEGER:
                fks.append(
                    f"FOREIGN KEY ({quote_identifier(col.name)}) "
                    f"REFERENCES {quote_identifier(col.references)}(\"id\")"
                )
        lines.append(
            f"CREATE TABLE {quote_identifier(table.name)} ({', '.join(parts + fks)});"
        )
    for mm in sorted(schema.physical_mm_tables(), key=lambda m: m.name):
        parts = [f"{quote_identifier(n)} {t}" for n, t in _mm_column_defs(mm)]
        fks = [
            f"FOREIGN KEY ({quote_identifier(mm.subject_column)}) "
            f"REFERENCES {quote_identifier(mm.subject_table)}(\"id\")"
        ]
        if mm.object_kind.value == "entity_ref":
            fks.append(
                f"FOREIGN KEY ({quote_identifier(mm.object_column)}) "
                f"REFERENCES {quote_identifier(mm.object_table)}(\"id\")"
            )
        lines.append(
            f"CREATE TABLE {quote_identifier(mm.name)} ({', '.join(parts + fks)});"
        )
    lines.append(RES_ID_DDL)
    return "\n".join(lines) + "\n"


def emit_dml(records: list[Record], ids: ResourceIdMap,
             schema: RelationalSchema | None = None) -> str:
    """INSERT statements for all records and the `_res_id` mapping."""
    lines: list[str] = []
    for iri, rid in ids.sorted_items():
        lines.append(
            f'INSERT INTO "{RES_ID_TABLE}" ("uri", "id") '
            f"VALUES ({sql_value(iri.value)}, {rid});"
        )
    column_order: dict[str, list[str]] = {}
    if schema is not None:
        for t in schema.tables:
            column_order[t.name] = [c.name for c in t.columns]
        for m in schema.physical_mm_tables():
            column_order[m.name] = mm_column_names(m)

    def key(r: Record):
        if "id" in r.values:
            return (r.table, 0, r.values["id"], ())
        cols = column_order.get(r.table, sorted(r.values))
        return (r.table, 1, 0, tuple(str(r.values.get(c)) for c in cols))

    for record in sorted(records, key=key):
        cols = column_order.get(record.table, list(record.values))
        names = ", ".join(quote_identifier(c) for c in cols)
        values = ", ".join(sql_value(record.values.get(c)) for c in cols)
        lines.append(
            f"INSERT INTO {quote_identifier(record.table)} ({names}) VALUES ({values});"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def emit_script(schema: RelationalSchema, records: list[Record], ids: ResourceIdMap) -> SqlScript:
    return SqlScript(ddl=emit_ddl(schema), dml=emit_dml(records, ids, schema))


def create_database(schema: RelationalSchema, records: list[Record],
                    ids: ResourceIdMap, path: str) -> SqlScript:
    """Create the SQLite file by executing the emitted script.

    A constraint violation indicates an internal inconsistency and aborts the
    whole run; rows are never skipped silently.
    """
    script = emit_script(schema, records, ids)
    load_script(script.text, path)
    return script


def load_script(script_text: str, path: str) -> None:
    """Execute a previously emitted script against a fresh database file."""
    conn = sqlite3.connect(path)
    try:
        conn.executescript(script_text)
        conn.commit()
    finally:
        conn.close()


def dump_tables(path: str) -> dict[str, list[tuple]]:
    """All user tables with their full, deterministically ordered contents."""
    conn = sqlite3.connect(path)
    try:
        names = [
            row[0]
            for row in conn.execute(
                "SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY name"
            )
        ]
        out = {}
        for name in names:
            rows = conn.execute(f"SELECT * FROM {quote_identifier(name)}").fetchall()
            out[name] = sorted(rows, key=lambda r: tuple(str(v) for v in r))
        return out
    finally:
        conn.close()

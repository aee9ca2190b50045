"""CRUD REST endpoints over a generated database.

One route pair per entity table (``/{table}`` and ``/{table}/{id}``) exchanging
JSON entities: scalar members per column (camelCase), one array member per
joined many-to-many relation, a ``type`` array reflecting which class tables
contain the record, plus the read-only ``/_res_id`` lookup.  List endpoints
filter with the `rql` query parameter and paginate with `limit`/`offset`.

Reads run concurrently on their own read-only connections; writes are
serialized through a single lock so every response reflects a consistent
snapshot.
"""

from __future__ import annotations

import base64
import binascii
import json
import sqlite3
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from .analysis import StorageClass
from .relational_model import ObjectKind, RelationalSchema, RES_ID_TABLE
from .rql import RqlError, evaluate, parse_rql
from .sql_emit import mm_column_names, quote_identifier

SKOLEM_REST_PREFIX = "/.well-known/genid/rest-"


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(message)


class Utf8JSONResponse(JSONResponse):
    media_type = "application/json; charset=utf-8"


def schema_sidecar_path(db_path: str) -> str:
    return db_path + ".schema.json"


def load_schema_sidecar(db_path: str) -> RelationalSchema:
    path = Path(schema_sidecar_path(db_path))
    if not path.exists():
        raise ValueError(f"schema description not found: {path}")
    return RelationalSchema.from_json_dict(json.loads(path.read_text(encoding="utf-8")))


def validate_database(db_path: str, schema: RelationalSchema) -> None:
    if not Path(db_path).exists():
        raise ValueError(f"database not found: {db_path}")
    conn = sqlite3.connect(db_path)
    try:
        names = {
            row[0]
            for row in conn.execute("SELECT name FROM sqlite_master WHERE type = 'table'")
        }
    finally:
        conn.close()
    if RES_ID_TABLE not in names:
        raise ValueError(f"database has no {RES_ID_TABLE} relation: {db_path}")
    missing = {t.name for t in schema.tables} - names
    missing |= {m.name for m in schema.physical_mm_tables()} - names
    if missing:
        raise ValueError(f"database is missing tables: {', '.join(sorted(missing))}")


class EntityStore:
    """Schema-aware access layer over the SQLite file."""

    def __init__(self, db_path: str, schema: RelationalSchema):
        self.db_path = db_path
        self.schema = schema
        self.write_lock = threading.Lock()
        self.tables = {t.name: t for t in schema.tables}
        self.relations = {}  # table -> subject-side physical join tables
        for t in schema.tables:
            self.relations[t.name] = [
                m for m in schema.physical_mm_tables() if m.subject_table == t.name
            ]
        self.class_ids = self._load_class_ids()

    def _load_class_ids(self) -> dict[str, int]:
        out = {}
        with self.read_conn() as conn:
            for t in self.schema.tables:
                row = conn.execute(
                    f'SELECT "id" FROM "{RES_ID_TABLE}" WHERE "uri" = ?',
                    (t.class_iri.value,),
                ).fetchone()
                if row is not None:
                    out[t.name] = row[0]
        return out

    def read_conn(self) -> sqlite3.Connection:
        return sqlite3.connect(f"file:{self.db_path}?mode=ro", uri=True)

    def write_conn(self) -> sqlite3.Connection:
        return sqlite3.connect(self.db_path)

    # --- reading -------------------------------------------------------------

    def entity_exists(self, conn, table: str, entity_id: int) -> bool:
        row = conn.execute(
            f"SELECT 1 FROM {quote_identifier(table)} WHERE \"id\" = ?", (entity_id,)
        ).fetchone()
        return row is not None

    def type_ids(self, conn, entity_id: int) -> list[int]:
        found = []
        for name, class_id in self.class_ids.items():
            if self.entity_exists(conn, name, entity_id):
                found.append(class_id)
        return sorted(found)

    def entity_to_json(self, conn, table: str, row: dict) -> dict:
        spec = self.tables[table]
        out = {"id": row["id"]}
        for col in spec.columns[1:]:
            out[col.json_attr] = _column_to_json(row.get(col.name), col.storage)
        out["type"] = self.type_ids(conn, row["id"])
        for mm in self.relations[table]:
            out[mm.json_attr] = self._relation_values(conn, mm, row["id"])
        return out

    def _relation_values(self, conn, mm, entity_id: int) -> list:
        cols = mm_column_names(mm)
        rows = conn.execute(
            f"SELECT {', '.join(quote_identifier(c) for c in cols[1:])} "
            f"FROM {quote_identifier(mm.name)} "
            f"WHERE {quote_identifier(mm.subject_column)} = ?",
            (entity_id,),
        ).fetchall()
        if mm.object_kind == ObjectKind.LANG_VALUE:
            items = [{"string": r[0], "lang": r[1]} for r in rows]
            return sorted(items, key=lambda d: (d["string"], d["lang"] or ""))
        values = [_column_to_json(r[0], mm.value_storage or StorageClass.TEXT) for r in rows]
        try:
            return sorted(values)
        except TypeError:
            return sorted(values, key=str)

    def fetch_entity(self, conn, table: str, entity_id: int) -> dict | None:
        spec = self.tables[table]
        cols = [c.name for c in spec.columns]
        row = conn.execute(
            f"SELECT {', '.join(quote_identifier(c) for c in cols)} "
            f"FROM {quote_identifier(table)} WHERE \"id\" = ?",
            (entity_id,),
        ).fetchone()
        if row is None:
            return None
        return self.entity_to_json(conn, table, dict(zip(cols, row)))

    def fetch_all(self, conn, table: str) -> list[dict]:
        spec = self.tables[table]
        cols = [c.name for c in spec.columns]
        rows = conn.execute(
            f"SELECT {', '.join(quote_identifier(c) for c in cols)} "
            f"FROM {quote_identifier(table)} ORDER BY \"id\"",
        ).fetchall()
        return [self.entity_to_json(conn, table, dict(zip(cols, r))) for r in rows]

    # --- writing -------------------------------------------------------------

    def next_id(self, conn) -> int:
        row = conn.execute(f'SELECT MAX("id") FROM "{RES_ID_TABLE}"').fetchone()
        return (row[0] or 0) + 1

    def parse_body(self, table: str, body, partial: bool, conn) -> tuple[dict, dict]:
        """Validate a request body into column values and relation lists.

        Returns (column values by column name, rows by join-table name); only
        members present in the body appear when `partial` is set.
        """
        if not isinstance(body, dict):
            raise ApiError(400, "request body must be a JSON object")
        spec = self.tables[table]
        columns_by_attr = {c.json_attr: c for c in spec.columns[1:]}
        relations_by_attr = {m.json_attr: m for m in self.relations[table]}
        known = set(columns_by_attr) | set(relations_by_attr) | {"type", "id"}
        unknown = set(body) - known
        if unknown:
            raise ApiError(400, f"unknown attribute(s): {', '.join(sorted(unknown))}")

        values: dict = {}
        for attr, col in columns_by_attr.items():
            if attr in body:
                values[col.name] = self._coerce_column(col, body[attr], conn)
            elif not partial:
                values[col.name] = None

        lists: dict = {}
        for attr, mm in relations_by_attr.items():
            if attr in body:
                lists[mm.name] = self._coerce_relation(mm, body[attr], conn)
            elif not partial:
                lists[mm.name] = []
        return values, lists

    def _coerce_column(self, col, value, conn):
        if value is None:
            return None
        attr = col.json_attr
        if col.references is not None and col.storage == StorageClass.INTEGER:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ApiError(400, f"attribute {attr!r} must be an integer id")
            if not self.entity_exists(conn, col.references, value):
                raise ApiError(409, f"attribute {attr!r} references missing id {value}")
            return value
        if col.mixed:
            if not isinstance(value, str):
                raise ApiError(400, f"attribute {attr!r} must be a string (id or URI)")
            return value
        return _coerce_scalar(value, col.storage, attr)

    def _coerce_relation(self, mm, value, conn) -> list[dict]:
        attr = mm.json_attr
        if not isinstance(value, list):
            raise ApiError(400, f"attribute {attr!r} must be an array")
        rows = []
        for item in value:
            row = {mm.subject_column: None}
            if mm.object_kind == ObjectKind.ENTITY_REF:
                if not isinstance(item, int) or isinstance(item, bool):
                    raise ApiError(400, f"attribute {attr!r} must hold integer ids")
                if not self.entity_exists(conn, mm.object_table, item):
                    raise ApiError(409, f"attribute {attr!r} references missing id {item}")
                row[mm.object_column] = item
            elif mm.object_kind == ObjectKind.DANGLING_URI:
                if not isinstance(item, str):
                    raise ApiError(400, f"attribute {attr!r} must hold URI strings")
                row[mm.object_column] = item
            elif mm.object_kind == ObjectKind.LANG_VALUE:
                if (not isinstance(item, dict)
                        or set(item) - {"string", "lang"}
                        or not isinstance(item.get("string"), str)
                        or not (item.get("lang") is None or isinstance(item.get("lang"), str))):
                    raise ApiError(
                        400, f"attribute {attr!r} must hold {{string, lang}} objects")
                row[mm.object_column] = item["string"]
                row["lang"] = item["lang"].lower() if item.get("lang") else None
            else:
                row[mm.object_column] = _coerce_scalar(
                    item, mm.value_storage or StorageClass.TEXT, attr)
            rows.append(row)
        return rows

    def check_type_member(self, conn, table: str, body, entity_id: int | None):
        """`type` reflects table membership and is read-only in request bodies."""
        if "type" not in body:
            return
        if entity_id is None:
            expected = sorted(v for k, v in self.class_ids.items() if k == table)
        else:
            expected = self.type_ids(conn, entity_id)
        if body["type"] != expected:
            raise ApiError(400, "attribute 'type' is read-only")

    def replace_relation_rows(self, conn, mm, entity_id: int, rows: list[dict]):
        conn.execute(
            f"DELETE FROM {quote_identifier(mm.name)} "
            f"WHERE {quote_identifier(mm.subject_column)} = ?",
            (entity_id,),
        )
        cols = mm_column_names(mm)
        for row in rows:
            row = dict(row)
            row[mm.subject_column] = entity_id
            conn.execute(
                f"INSERT INTO {quote_identifier(mm.name)} "
                f"({', '.join(quote_identifier(c) for c in cols)}) "
                f"VALUES ({', '.join('?' for _ in cols)})",
                [row.get(c) for c in cols],
            )

    def delete_entity_rows(self, conn, table: str, entity_id: int):
        spec = self.tables[table]
        for mm in self.relations[table]:
            conn.execute(
                f"DELETE FROM {quote_identifier(mm.name)} "
                f"WHERE {quote_identifier(mm.subject_column)} = ?",
                (entity_id,),
            )
        for mm in self.schema.physical_mm_tables():
            if mm.object_kind == ObjectKind.ENTITY_REF and mm.object_table == table:
                conn.execute(
                    f"DELETE FROM {quote_identifier(mm.name)} "
                    f"WHERE {quote_identifier(mm.object_column)} = ?",
                    (entity_id,),
                )
        for other in self.schema.tables:
            for col in other.columns[1:]:
                if col.references == table:
                    conn.execute(
                        f"UPDATE {quote_identifier(other.name)} "
                        f"SET {quote_identifier(col.name)} = NULL "
                        f"WHERE {quote_identifier(col.name)} = ?",
                        (entity_id,),
                    )
                elif col.mixed and f"class:{spec.class_iri.value}" in col.range_keys:
                    conn.execute(
                        f"UPDATE {quote_identifier(other.name)} "
                        f"SET {quote_identifier(col.name)} = NULL "
                        f"WHERE {quote_identifier(col.name)} = ?",
                        (str(entity_id),),
                    )
        conn.execute(
            f"DELETE FROM {quote_identifier(table)} WHERE \"id\" = ?", (entity_id,)
        )


def _column_to_json(value, storage: StorageClass):
    if isinstance(value, bytes):
        return base64.b64encode(value).decode("ascii")
    return value


def _coerce_scalar(value, storage: StorageClass, attr: str):
    if storage == StorageClass.INTEGER:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise ApiError(400, f"attribute {attr!r} must be an integer")
    if storage == StorageClass.REAL:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        raise ApiError(400, f"attribute {attr!r} must be a number")
    if storage == StorageClass.BLOB:
        if isinstance(value, str):
            try:
                return base64.b64decode(value, validate=True)
            except (binascii.Error, ValueError):
                pass
        raise ApiError(400, f"attribute {attr!r} must be a base64 string")
    if isinstance(value, str):
        return value
    raise ApiError(400, f"attribute {attr!r} must be a string")


def _parse_window(limit: str | None, offset: str | None, default_limit: int) -> tuple[int, int]:
    def parse(name, raw, fallback):
        if raw is None:
            return fallback
        try:
            n = int(raw)
        except ValueError:
            raise ApiError(400, f"{name} must be a non-negative integer") from None
        if n < 0:
            raise ApiError(400, f"{name} must be a non-negative integer")
        return n

    return parse("limit", limit, default_limit), parse("offset", offset, 0)


def create_app(db_path: str, schema: RelationalSchema | None = None,
               limit_default: int = 1000) -> FastAPI:
    """Build the application; raises ValueError if the database is unusable."""
    if schema is None:
        schema = load_schema_sidecar(db_path)
    validate_database(db_path, schema)
    store = EntityStore(db_path, schema)

    app = FastAPI(title="rdfforge", docs_url=None, redoc_url=None, openapi_url=None,
                  default_response_class=Utf8JSONResponse)

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return Utf8JSONResponse({"error": exc.message}, status_code=exc.status)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        return Utf8JSONResponse({"error": "invalid request"}, status_code=400)

    def require_table(table: str):
        if table not in store.tables:
            raise ApiError(404, f"unknown table {table!r}")

    def require_id(raw: str) -> int:
        try:
            return int(raw)
        except ValueError:
            raise ApiError(404, "no such entity") from None

    @app.get("/_res_id")
    def resolve_resource(uri: str | None = None):
        if uri is None:
            raise ApiError(400, "missing 'uri' query parameter")
        with store.read_conn() as conn:
            row = conn.execute(
                f'SELECT "id" FROM "{RES_ID_TABLE}" WHERE "uri" = ?', (uri,)
            ).fetchone()
        if row is None:
            raise ApiError(404, f"unknown resource {uri!r}")
        return {"uri": uri, "id": row[0]}

    @app.get("/{table}")
    def list_entities(table: str, rql: str | None = None,
                      limit: str | None = None, offset: str | None = None):
        require_table(table)
        window, skip = _parse_window(limit, offset, limit_default)
        expr = None
        if rql is not None:
            try:
                expr = parse_rql(rql)
            except RqlError as exc:
                raise ApiError(400, str(exc)) from None
        with store.read_conn() as conn:
            entities = store.fetch_all(conn, table)
        if expr is not None:
            try:
                entities = [e for e in entities if evaluate(expr, e)]
            except RqlError as exc:
                raise ApiError(400, str(exc)) from None
        return entities[skip:skip + window]

    @app.get("/{table}/{entity_id}")
    def get_entity(table: str, entity_id: str):
        require_table(table)
        eid = require_id(entity_id)
        with store.read_conn() as conn:
            entity = store.fetch_entity(conn, table, eid)
        if entity is None:
            raise ApiError(404, "no such entity")
        return entity

    @app.post("/{table}", status_code=201)
    async def create_entity(table: str, request: Request):
        require_table(table)
        body = await _json_body(request)
        if "id" in body:
            raise ApiError(400, "attribute 'id' is assigned by the server")
        with store.write_lock:
            conn = store.write_conn()
            try:
                store.check_type_member(conn, table, body, None)
                values, lists = store.parse_body(table, body, partial=False, conn=conn)
                new_id = store.next_id(conn)
                iri = store.schema.base.rstrip("/") + SKOLEM_REST_PREFIX + str(new_id)
                conn.execute(
                    f'INSERT INTO "{RES_ID_TABLE}" ("uri", "id") VALUES (?, ?)',
                    (iri, new_id),
                )
                cols = ["id"] + list(values)
                conn.execute(
                    f"INSERT INTO {quote_identifier(table)} "
                    f"({', '.join(quote_identifier(c) for c in cols)}) "
                    f"VALUES ({', '.join('?' for _ in cols)})",
                    [new_id] + list(values.values()),
                )
                for mm in store.relations[table]:
                    store.replace_relation_rows(conn, mm, new_id, lists.get(mm.name, []))
                conn.commit()
                entity = store.fetch_entity(conn, table, new_id)
            finally:
                conn.close()
        return entity

    async def _update(table: str, entity_id: str, request: Request, partial: bool):
        require_table(table)
        eid = require_id(entity_id)
        body = await _json_body(request)
        if "id" in body and body["id"] != eid:
            raise ApiError(400, "attribute 'id' cannot be changed")
        with store.write_lock:
            conn = store.write_conn()
            try:
                if not store.entity_exists(conn, table, eid):
                    raise ApiError(404, "no such entity")
                store.check_type_member(conn, table, body, eid)
                values, lists = store.parse_body(table, body, partial=partial, conn=conn)
                if values:
                    assignment = ", ".join(f"{quote_identifier(c)} = ?" for c in values)
                    conn.execute(
                        f"UPDATE {quote_identifier(table)} SET {assignment} WHERE \"id\" = ?",
                        list(values.values()) + [eid],
                    )
                for mm in store.relations[table]:
                    if mm.name in lists:
                        store.replace_relation_rows(conn, mm, eid, lists[mm.name])
                conn.commit()
                entity = store.fetch_entity(conn, table, eid)
            finally:
                conn.close()
        return entity

    @app.put("/{table}/{entity_id}")
    async def replace_entity(table: str, entity_id: str, request: Request):
        return await _update(table, entity_id, request, partial=False)

    @app.patch("/{table}/{entity_id}")
    async def patch_entity(table: str, entity_id: str, request: Request):
        return await _update(table, entity_id, request, partial=True)

    @app.delete("/{table}/{entity_id}")
    def delete_entity(table: str, entity_id: str):
        require_table(table)
        eid = require_id(entity_id)
        with store.write_lock:
            conn = store.write_conn()
            try:
                if not store.entity_exists(conn, table, eid):
                    raise ApiError(404, "no such entity")
                store.delete_entity_rows(conn, table, eid)
                conn.commit()
            finally:
                conn.close()
        return Response(status_code=204)

    return app


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except json.JSONDecodeError:
        raise ApiError(400, "request body is not valid JSON") from None
    if not isinstance(body, dict):
        raise ApiError(400, "request body must be a JSON object")
    return body

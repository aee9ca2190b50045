import json
from pathlib import Path

import pytest

from rdfforge.pipeline import run_pipeline
from rdfforge.rdf_core import parse_turtle, skolemize
from rdfforge.rest_api import create_app, schema_sidecar_path
from rdfforge.sql_emit import create_database

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def load_graph(name: str):
    return skolemize(parse_turtle(fixture_text(name)), deterministic=True)


def two_types_text(n: int = 100) -> str:
    """n instances, each typed with exactly the same two classes."""
    lines = ["@prefix ex: <urn:tt:> ."]
    for i in range(1, n + 1):
        lines.append(f"ex:i{i:03d} a ex:Left , ex:Right .")
    return "\n".join(lines) + "\n"


def make_db(tmp_path, ttl_text: str, name: str = "data.db"):
    """Run the full pipeline on Turtle text and materialize the database."""
    result = run_pipeline(parse_turtle(ttl_text), deterministic=True)
    db = str(tmp_path / name)
    create_database(result.schema, result.records, result.ids, db)
    Path(schema_sidecar_path(db)).write_text(
        json.dumps(result.schema.to_json_dict()), encoding="utf-8")
    return db, result


def make_client(db: str, **kwargs):
    from fastapi.testclient import TestClient
    return TestClient(create_app(db, **kwargs))


@pytest.fixture
def fig1_graph():
    return load_graph("fig1.ttl")

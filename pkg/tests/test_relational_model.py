import json

import pytest

from rdfforge.analysis import (
    StorageClass,
    classify_properties,
    discover_classes,
)
from rdfforge.rdf_core import (
    Iri,
    Literal,
    RDF_TYPE,
    Triple,
    XSD_NS,
    graph_from_triples,
)
from rdfforge.relational_model import (
    ObjectKind,
    RelationalSchema,
    assign_ids,
    build_schema,
    name_column,
    name_mm,
    name_table,
    populate,
)

from conftest import load_graph

EX = "urn:t:"


def iri(n):
    return Iri(EX + n)


def t(s, p, o):
    return Triple(iri(s), iri(p), iri(o) if isinstance(o, str) else o)


def typed(s, c):
    return Triple(iri(s), RDF_TYPE, iri(c))


def build_all(g):
    classes = discover_classes(g)
    profiles, orphans = classify_properties(g, classes)
    schema = build_schema(classes, profiles, orphan_statements=orphans)
    ids = assign_ids(g)
    records = populate(g, schema, ids, classes)
    return classes, profiles, schema, ids, records


class TestAssignIds:
    def test_lexicographic_from_one(self):
        g = graph_from_triples([Triple(Iri("urn:a"), Iri("urn:p"), Iri("urn:b"))])
        ids = assign_ids(g)
        assert ids.by_iri == {Iri("urn:a"): 1, Iri("urn:b"): 2}

    def test_empty(self):
        assert len(assign_ids(graph_from_triples([]))) == 0

    def test_fig1_six_resources(self, fig1_graph):
        ids = assign_ids(fig1_graph)
        assert len(ids) == 6
        assert sorted(ids.by_iri.values()) == [1, 2, 3, 4, 5, 6]

    def test_predicates_not_mapped(self):
        g = graph_from_triples([t("s", "p", "o")])
        assert iri("p") not in assign_ids(g).by_iri


class TestNaming:
    def test_table_pascal_to_snake(self):
        assert name_table(Iri("urn:x:ProductFeature")) == "product_feature"

    def test_column_camel_to_snake(self):
        assert name_column(Iri("urn:x:readsBook")) == "reads_book"

    def test_mm_name(self):
        assert name_mm("review", Iri("urn:x:text")) == "mn_review_text"
        assert name_mm("pokemon", Iri("urn:x:type"), "water") == "mn_pokemon_type_water"


class TestBuildSchema:
    def test_fig1_three_physical_tables(self, fig1_graph):
        _, _, schema, _, _ = build_all(fig1_graph)
        assert {t.name for t in schema.tables} == {"book", "person"}
        assert [m.name for m in schema.physical_mm_tables()] == ["mn_person_reads_book"]

    def test_fig1_columns(self, fig1_graph):
        _, _, schema, _, _ = build_all(fig1_graph)
        assert [c.name for c in schema.table("person").columns] == ["id", "name"]
        assert [c.name for c in schema.table("book").columns] == ["id", "title"]

    def test_id_column_is_integer_non_null(self, fig1_graph):
        _, _, schema, _, _ = build_all(fig1_graph)
        col = schema.table("person").columns[0]
        assert col.storage == StorageClass.INTEGER
        assert col.nullable is False

    def test_no_uri_column(self, fig1_graph):
        _, _, schema, _, _ = build_all(fig1_graph)
        for table in schema.tables:
            assert "uri" not in [c.name for c in table.columns]

    def test_lang_string_becomes_mm_with_lang(self):
        g = graph_from_triples([
            typed("r1", "Review"),
            t("r1", "text", Literal("good", lang="en")),
        ])
        _, _, schema, _, _ = build_all(g)
        (mm,) = schema.physical_mm_tables()
        assert mm.name == "mn_review_text"
        assert mm.lang_column is True
        assert mm.object_kind == ObjectKind.LANG_VALUE

    def test_one_to_many_column_in_range_table(self):
        g = graph_from_triples([
            typed("sp", "Species"),
            typed("pk1", "Pokemon"), typed("pk2", "Pokemon"),
            t("sp", "speciesOf", "pk1"), t("sp", "speciesOf", "pk2"),
        ])
        _, _, schema, ids, records = build_all(g)
        pokemon = schema.table("pokemon")
        col = pokemon.column("species_of")
        assert col.references == "species"
        rows = {r.values["id"]: r.values["species_of"] for r in records if r.table == "pokemon"}
        assert set(rows.values()) == {ids.id_of(iri("sp"))}

    def test_dangling_column_stores_uri_text(self):
        g = graph_from_triples([typed("d", "D"), t("d", "link", "ghost")])
        _, _, schema, _, records = build_all(g)
        col = schema.table("d").column("link")
        assert col.storage == StorageClass.TEXT
        assert col.references is None
        (rec,) = [r for r in records if r.table == "d"]
        assert rec.values["link"] == EX + "ghost"

    def test_type_relations_are_virtual(self, fig1_graph):
        _, _, schema, _, _ = build_all(fig1_graph)
        virtual = [m for m in schema.mm_tables if m.virtual]
        assert {m.name for m in virtual} == {"mn_person_type", "mn_book_type"}
        assert all(m.object_kind == ObjectKind.TYPE_REF for m in virtual)

    def test_mm_collision_gets_range_suffix(self):
        g = graph_from_triples([
            typed("pk1", "Pokemon"), typed("pk2", "Pokemon"),
            typed("w1", "Water"), typed("w2", "Water"),
            typed("f1", "Fire"), typed("f2", "Fire"),
            t("pk1", "type", "w1"), t("pk1", "type", "w2"), t("pk2", "type", "w1"),
            t("pk1", "type", "f1"), t("pk1", "type", "f2"), t("pk2", "type", "f1"),
        ])
        _, _, schema, _, _ = build_all(g)
        names = {m.name for m in schema.physical_mm_tables()}
        assert names == {"mn_pokemon_type_fire", "mn_pokemon_type_water"}

    def test_json_round_trip(self, fig1_graph):
        _, _, schema, _, _ = build_all(fig1_graph)
        data = json.loads(json.dumps(schema.to_json_dict()))
        again = RelationalSchema.from_json_dict(data)
        assert again.to_json_dict() == schema.to_json_dict()

    def test_schema_deterministic(self, fig1_graph):
        _, _, s1, _, _ = build_all(fig1_graph)
        _, _, s2, _, _ = build_all(fig1_graph)
        assert json.dumps(s1.to_json_dict()) == json.dumps(s2.to_json_dict())


class TestJsonAttrs:
    def test_entity_ref_attr_combines_property_and_range(self):
        g = graph_from_triples([
            typed("p1", "Product"), typed("p2", "Product"),
            typed("f1", "ProductFeature"), typed("f2", "ProductFeature"),
            t("p1", "productFeature", "f1"), t("p1", "productFeature", "f2"),
            t("p2", "productFeature", "f1"),
        ])
        _, _, schema, _, _ = build_all(g)
        (mm,) = schema.physical_mm_tables()
        assert mm.json_attr == "productFeatureProductFeature"

    def test_column_attr_is_camel_case(self):
        g = graph_from_triples([
            typed("o", "Offer"),
            t("o", "deliveryDays", Literal("3", datatype=Iri(XSD_NS + "integer"))),
        ])
        _, _, schema, _, _ = build_all(g)
        assert schema.table("offer").column("delivery_days").json_attr == "deliveryDays"


class TestPopulate:
    def test_row_per_typed_instance(self):
        triples = [typed(f"pk{i}", "Pokemon") for i in range(5)]
        g = graph_from_triples(triples)
        _, _, schema, _, records = build_all(g)
        assert len([r for r in records if r.table == "pokemon"]) == 5

    def test_multityped_duplicated_with_identical_columns(self):
        g = graph_from_triples([
            typed("x", "Anime"), typed("x", "Work"),
            t("x", "label", Literal("plastic memories")),
        ])
        _, _, schema, ids, records = build_all(g)
        anime = [r for r in records if r.table == "anime"]
        work = [r for r in records if r.table == "work"]
        assert len(anime) == len(work) == 1
        assert anime[0].values == work[0].values

    def test_mm_row_requires_matching_range(self):
        g = graph_from_triples([
            typed("s1", "C"), typed("s2", "C"),
            typed("o1", "R"), typed("o2", "R"), typed("oX", "Other"),
            t("s1", "p", "o1"), t("s1", "p", "o2"), t("s2", "p", "o1"),
            t("s1", "p", "oX"),
        ])
        _, _, schema, ids, records = build_all(g)
        table_r = [m for m in schema.physical_mm_tables() if m.object_table == "r"]
        rows = [r for r in records if r.table == table_r[0].name]
        stored = {r.values[table_r[0].object_column] for r in rows}
        assert ids.id_of(iri("oX")) not in stored
        assert stored == {ids.id_of(iri("o1")), ids.id_of(iri("o2"))}

    def test_datetime_stored_as_epoch_millis(self):
        g = graph_from_triples([
            typed("o", "Offer"),
            t("o", "validTo", Literal("2008-06-20T00:00:00", datatype=Iri(XSD_NS + "dateTime"))),
        ])
        _, _, schema, _, records = build_all(g)
        (rec,) = [r for r in records if r.table == "offer"]
        assert rec.values["valid_to"] == 1213920000000

    def test_unparsable_literal_kept_as_text(self, caplog):
        g = graph_from_triples([
            typed("o", "Offer"),
            t("o", "n", Literal("5", datatype=Iri(XSD_NS + "integer"))),
            typed("o2", "Offer"),
            t("o2", "n", Literal("bogus", datatype=Iri(XSD_NS + "integer"))),
        ])
        with caplog.at_level("WARNING"):
            _, _, schema, _, records = build_all(g)
        values = sorted(str(r.values["n"]) for r in records if r.table == "offer")
        assert values == ["5", "bogus"]
        assert any("stored as text" in m for m in caplog.messages)

    def test_mixed_typed_and_untyped_share_text_column(self):
        g = graph_from_triples([
            typed("s1", "C"), typed("s2", "C"), typed("o1", "R"),
            t("s1", "p", "o1"),
            t("s2", "p", "ghost"),
        ])
        _, _, schema, ids, records = build_all(g)
        col = schema.table("c").column("p")
        assert col.storage == StorageClass.TEXT
        assert col.mixed is True
        by_id = {r.values["id"]: r.values["p"] for r in records if r.table == "c"}
        assert by_id[ids.id_of(iri("s1"))] == str(ids.id_of(iri("o1")))
        assert by_id[ids.id_of(iri("s2"))] == EX + "ghost"

    def test_mixed_with_double_links_demoted_to_join_tables(self):
        g = graph_from_triples([
            typed("s1", "C"), typed("o1", "R"),
            t("s1", "p", "o1"),
            t("s1", "p", "ghost"),
        ])
        _, _, schema, ids, records = build_all(g)
        assert [c.name for c in schema.table("c").columns] == ["id"]
        kinds = {m.object_kind for m in schema.physical_mm_tables()}
        assert kinds == {ObjectKind.ENTITY_REF, ObjectKind.DANGLING_URI}
        dangling = [m for m in schema.physical_mm_tables()
                    if m.object_kind == ObjectKind.DANGLING_URI][0]
        rows = [r for r in records if r.table == dangling.name]
        assert rows[0].values[dangling.object_column] == EX + "ghost"


class TestRoundTripCompleteness:
    @pytest.mark.parametrize("name", [
        "fig1.ttl", "five_classes.ttl", "cardinality_mix.ttl", "multityped_mix.ttl",
    ])
    def test_fixtures(self, name):
        from oracles import assert_round_trip_complete, records_by_table
        g = load_graph(name)
        classes, profiles, schema, ids, records = build_all(g)
        assert_round_trip_complete(g, schema, ids, records_by_table(records))

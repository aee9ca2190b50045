import pytest
from hypothesis import given, strategies as st

from rdfforge.rdf_core import (
    BlankNode,
    Iri,
    Literal,
    RDF_TYPE,
    RdfSyntaxError,
    Triple,
    XSD_INTEGER,
    graph_from_triples,
    local_name,
    parse_ntriples,
    parse_turtle,
    serialize_turtle,
    skolemize,
)


class TestTerms:
    def test_iri_requires_scheme(self):
        with pytest.raises(ValueError):
            Iri("no-scheme-here")
        with pytest.raises(ValueError):
            Iri("")

    def test_literal_lang_excludes_datatype(self):
        with pytest.raises(ValueError):
            Literal("x", datatype=XSD_INTEGER, lang="en")

    def test_lang_tag_lowercased(self):
        assert Literal("x", lang="EN-US").lang == "en-us"

    def test_triple_subject_not_literal(self):
        with pytest.raises(ValueError):
            Triple(Literal("x"), Iri("urn:p"), Iri("urn:o"))


class TestParseNTriples:
    def test_single_statement(self):
        g = parse_ntriples('<urn:a> <urn:p> "x" .')
        assert len(g) == 1
        assert g.triples[0].object == Literal("x")

    def test_empty_document(self):
        assert len(parse_ntriples("")) == 0

    def test_blank_node_subject(self):
        g = parse_ntriples("_:b1 <urn:p> <urn:o> .")
        assert g.triples[0].subject == BlankNode("b1")

    def test_typed_and_tagged_literals(self):
        g = parse_ntriples(
            '<urn:a> <urn:p> "3"^^<http://www.w3.org/2001/XMLSchema#integer> .\n'
            '<urn:a> <urn:q> "hi"@EN .'
        )
        assert g.triples[0].object == Literal("3", datatype=XSD_INTEGER)
        assert g.triples[1].object == Literal("hi", lang="en")

    def test_escapes(self):
        g = parse_ntriples('<urn:a> <urn:p> "a\\"b\\nc\\u00e9" .')
        assert g.triples[0].object.lexical == 'a"b\ncé'

    def test_comments_and_blank_lines(self):
        g = parse_ntriples("# header\n\n<urn:a> <urn:p> <urn:o> . # trailing\n")
        assert len(g) == 1

    def test_error_carries_line_number(self):
        with pytest.raises(RdfSyntaxError) as exc:
            parse_ntriples("<urn:a> <urn:p> <urn:o> .\n<urn:a> <urn:p> nope .")
        assert exc.value.line == 2

    def test_missing_dot(self):
        with pytest.raises(RdfSyntaxError):
            parse_ntriples("<urn:a> <urn:p> <urn:o>")

    def test_malformed_iri(self):
        with pytest.raises(RdfSyntaxError):
            parse_ntriples("<noscheme> <urn:p> <urn:o> .")

    def test_duplicates_collapsed(self):
        g = parse_ntriples("<urn:a> <urn:p> <urn:o> .\n<urn:a> <urn:p> <urn:o> .")
        assert len(g) == 1
        assert g.duplicates_collapsed == 1


class TestParseTurtle:
    def test_a_keyword(self):
        g = parse_turtle("@prefix ex: <urn:ex:> . ex:s a ex:C .")
        assert g.triples[0] == Triple(Iri("urn:ex:s"), RDF_TYPE, Iri("urn:ex:C"))

    def test_lang_tag(self):
        g = parse_turtle('@prefix ex: <urn:ex:> . ex:s ex:p "hi"@en .')
        assert g.triples[0].object == Literal("hi", lang="en")

    def test_predicate_and_object_lists(self):
        g = parse_turtle(
            "@prefix ex: <urn:ex:> .\n"
            'ex:s ex:p ex:o1 , ex:o2 ;\n'
            '     ex:q "v" .'
        )
        assert len(g) == 3
        preds = [t.predicate.value for t in g.triples]
        assert preds == ["urn:ex:p", "urn:ex:p", "urn:ex:q"]

    def test_trailing_semicolon(self):
        g = parse_turtle("@prefix ex: <urn:ex:> . ex:s ex:p ex:o ; .")
        assert len(g) == 1

    def test_numeric_and_boolean_shorthand(self):
        g = parse_turtle("@prefix ex: <urn:ex:> . ex:s ex:p 42 ; ex:q 3.5 ; ex:r true .")
        objs = [t.object for t in g.triples]
        assert objs[0].datatype.value.endswith("integer")
        assert objs[1].datatype.value.endswith("decimal")
        assert objs[2].datatype.value.endswith("boolean")

    def test_undefined_prefix(self):
        with pytest.raises(RdfSyntaxError) as exc:
            parse_turtle("ex:s ex:p ex:o .")
        assert "prefix" in str(exc.value)

    def test_error_has_line_and_column(self):
        with pytest.raises(RdfSyntaxError) as exc:
            parse_turtle("@prefix ex: <urn:ex:> .\nex:s ex:p %%% .")
        assert exc.value.line == 2
        assert exc.value.col is not None

    def test_blank_node_label(self):
        g = parse_turtle("@prefix ex: <urn:ex:> . _:x ex:p ex:o .")
        assert g.triples[0].subject == BlankNode("x")

    def test_empty_prefix(self):
        g = parse_turtle("@prefix : <urn:d:> . :s :p :o .")
        assert g.triples[0].subject == Iri("urn:d:s")

    def test_prefixed_datatype(self):
        g = parse_turtle(
            "@prefix ex: <urn:ex:> .\n"
            "@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n"
            'ex:s ex:p "5"^^xsd:integer .'
        )
        assert g.triples[0].object == Literal("5", datatype=XSD_INTEGER)

    def test_equivalent_to_ntriples_expansion(self):
        ttl = "@prefix ex: <urn:ex:> . ex:s a ex:C ; ex:p \"x\" ."
        nt = (
            '<urn:ex:s> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <urn:ex:C> .\n'
            '<urn:ex:s> <urn:ex:p> "x" .'
        )
        assert parse_turtle(ttl).same_triples(parse_ntriples(nt))


class TestSkolemize:
    def test_identity_without_blank_nodes(self):
        g = parse_ntriples("<urn:a> <urn:p> <urn:o> .")
        assert skolemize(g) is g

    def test_same_label_same_iri(self):
        g = parse_ntriples("_:b1 <urn:p> <urn:o> .\n<urn:s> <urn:q> _:b1 .")
        sk = skolemize(g)
        assert sk.triples[0].subject == sk.triples[1].object
        assert isinstance(sk.triples[0].subject, Iri)
        assert "/.well-known/genid/" in sk.triples[0].subject.value

    def test_distinct_labels_distinct_iris(self):
        g = parse_ntriples("_:a <urn:p> _:b .")
        sk = skolemize(g)
        assert sk.triples[0].subject != sk.triples[0].object

    def test_triple_count_unchanged(self):
        g = parse_ntriples("_:a <urn:p> _:b .\n_:a <urn:p> <urn:o> .")
        assert len(skolemize(g)) == len(g)

    def test_deterministic_counter(self):
        g = parse_ntriples("_:a <urn:p> _:b .")
        sk = skolemize(g, base="urn:x", deterministic=True)
        assert sk.triples[0].subject.value == "urn:x/.well-known/genid/1"
        assert sk.triples[0].object.value == "urn:x/.well-known/genid/2"

    def test_idempotent_on_skolemized_graph(self):
        g = parse_ntriples("_:a <urn:p> _:b .")
        once = skolemize(g, deterministic=True)
        twice = skolemize(once, deterministic=True)
        assert once.same_triples(twice)


class TestLocalName:
    @pytest.mark.parametrize(
        "iri,expected",
        [
            ("http://xmlns.com/foaf/0.1/Person", "Person"),
            ("urn:ex:readsBook", "readsBook"),
            ("http://ex.org/onto#ProductFeature", "ProductFeature"),
        ],
    )
    def test_suffix_rules(self, iri, expected):
        assert local_name(Iri(iri)) == expected

    def test_never_empty(self):
        assert local_name(Iri("urn:")) != ""


# property-based round trip over the supported subset

_iris = st.sampled_from([Iri(f"urn:ex:{n}") for n in ("a", "b", "c", "p", "q")])
_literals = st.builds(
    Literal,
    st.text(min_size=0, max_size=8),
    datatype=st.none() | st.just(XSD_INTEGER),
    lang=st.none(),
) | st.builds(Literal, st.text(max_size=8), lang=st.just("en"))
_terms = _iris | _literals


@given(st.lists(st.tuples(_iris, _iris, _terms), max_size=12))
def test_turtle_round_trip(items):
    g = graph_from_triples(Triple(s, p, o) for s, p, o in items)
    again = parse_turtle(serialize_turtle(g))
    assert again.same_triples(g)


def test_duplicate_statements_never_increase_count():
    base = "<urn:a> <urn:p> <urn:o> ."
    g1 = parse_ntriples(base)
    g2 = parse_ntriples(base + "\n" + base + "\n" + base)
    assert len(g1) == len(g2) == 1
